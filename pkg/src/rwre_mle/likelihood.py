"""Log annealed weights φ_θ and the criterion ℓ_n(θ) = Σ_x φ_θ(L_{x+1}, L_x).

φ_θ(x, y) = log ∫ a^{x+1} (1-a)^y dν_θ(a) is evaluated in closed form in
the log domain: a two-term log-sum-exp for two-point laws and log-gamma
differences for Beta laws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .env_model import BetaEnv, EnvFamily, TwoPointFree, TwoPointKnown
from .errors import DomainError

BATCH_ENTRIES = 1 << 21


def _two_point(p, a1, a2, x, y):
    with np.errstate(divide="ignore"):
        t1 = np.log(p) + (x + 1.0) * np.log(a1) + y * np.log1p(-a1)
        t2 = np.log1p(-p) + (x + 1.0) * np.log(a2) + y * np.log1p(-a2)
    return np.logaddexp(t1, t2)


def _beta(alpha, beta, x, y):
    return (gammaln(x + 1.0 + alpha) + gammaln(y + beta) - gammaln(x + 1.0 + y + alpha + beta)
            - (gammaln(alpha) + gammaln(beta) - gammaln(alpha + beta)))


def _check_domain(family_type, thetas):
    t = thetas
    if family_type is TwoPointKnown:
        bad = (t[:, 0] < 0) | (t[:, 0] > 1)
    elif family_type is TwoPointFree:
        bad = ((t[:, 0] < 0) | (t[:, 0] > 1) | (t[:, 1] <= 0) | (t[:, 1] >= 1)
               | (t[:, 2] <= 0) | (t[:, 2] >= 1))
    else:
        bad = (t[:, 0] <= 0) | (t[:, 1] <= 0)
    if np.any(bad | ~np.isfinite(t).all(axis=1)):
        raise DomainError(f"parameter outside the {family_type.name} domain: {t[bad][:1].tolist()}")


def log_weights(family: EnvFamily, thetas, x, y) -> np.ndarray:
    """φ at many parameter points: returns shape ``(len(thetas),) + x.shape``.

    The family supplies the variant and any fixed support points; the free
    coordinates come from ``thetas`` (rows in ``family.param_names`` order).
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    ftype = type(family)
    _check_domain(ftype, thetas)
    shape = (thetas.shape[0],) + (1,) * x.ndim
    cols = [thetas[:, j].reshape(shape) for j in range(thetas.shape[1])]
    if ftype is TwoPointKnown:
        return _two_point(cols[0], family.a1, family.a2, x, y)
    if ftype is TwoPointFree:
        return _two_point(cols[0], cols[1], cols[2], x, y)
    if ftype is BetaEnv:
        return _beta(cols[0], cols[1], x, y)
    raise TypeError(f"unsupported family {ftype.__name__}")


def phi(family: EnvFamily, x, y, theta=None):
    """φ_θ(x, y); θ defaults to the family's own parameter."""
    th = family.theta if theta is None else np.ravel(np.asarray(theta, dtype=float))
    out = log_weights(family, th[None, :], x, y)[0]
    return out if np.ndim(out) else float(out)


class Criterion:
    """ℓ_n(θ) for fixed observed pairs ``(L_{x+1}, L_x)``, x = 0..n-1.

    Pairs are stored as a frequency table, so each evaluation costs
    O(#distinct pairs). ``shift`` adds a constant to every φ summand
    (``n * shift`` is added to the sum).
    """

    def __init__(self, family: EnvFamily, pairs, shift: float = 0.0):
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        if pairs.size and pairs.min() < 0:
            raise ValueError("left-step counts must be nonnegative")
        self.family = family
        self.n = int(pairs.shape[0])
        self.shift = float(shift)
        if self.n:
            uniq, counts = np.unique(pairs, axis=0, return_counts=True)
        else:
            uniq, counts = np.zeros((0, 2), dtype=np.int64), np.zeros(0, dtype=np.int64)
        self.x = uniq[:, 0].astype(float)
        self.y = uniq[:, 1].astype(float)
        self.weights = counts.astype(float)
        for arr in (self.x, self.y, self.weights):
            arr.setflags(write=False)

    @property
    def n_distinct(self) -> int:
        return self.x.size

    def with_shift(self, shift: float) -> "Criterion":
        new = object.__new__(Criterion)
        new.__dict__.update(self.__dict__)
        new.shift = float(shift)
        return new

    def value(self, theta) -> float:
        return float(self.values(np.atleast_2d(theta))[0])

    __call__ = value

    def values(self, thetas) -> np.ndarray:
        """ℓ_n at each row of ``thetas``."""
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        out = np.empty(thetas.shape[0])
        if not self.n:
            out[:] = 0.0
            return out
        step = max(1, BATCH_ENTRIES // max(1, self.n_distinct))
        for i in range(0, thetas.shape[0], step):
            lw = log_weights(self.family, thetas[i:i + step], self.x, self.y)
            out[i:i + step] = lw @ self.weights
        if self.shift:
            out += self.n * self.shift
        return out

    def summands(self, theta) -> np.ndarray:
        return phi(self.family, self.x, self.y, theta)


def criterion_value(crit: Criterion, theta) -> float:
    return crit.value(theta)


@dataclass(frozen=True)
class LimitEstimate:
    theta: tuple
    value: float
    stderr: float
    n_used: int


def batch_means(series: np.ndarray, batches: int = 50) -> tuple[float, float]:
    """Mean and batch-means standard error of a stationary series."""
    series = np.asarray(series, dtype=float)
    m = series.size // batches
    if m < 1:
        raise ValueError("series shorter than the number of batches")
    trimmed = series[series.size - m * batches:]
    bm = trimmed.reshape(batches, m).mean(axis=1)
    return float(series.mean()), float(bm.std(ddof=1) / math.sqrt(batches))


def chain_estimates(family_star: EnvFamily, thetas, z: np.ndarray,
                    burn_in: float = 0.1, batches: int = 50) -> list[LimitEstimate]:
    """Ergodic averages of φ_θ(Z_k, Z_{k+1}) along a given chain, one per θ."""
    z = np.asarray(z, dtype=float)
    start = int(burn_in * (z.size - 1))
    xs, ys = z[start:-1], z[start + 1:]
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    lw = log_weights(family_star, thetas, xs, ys)
    out = []
    for th, row in zip(thetas, lw):
        mean, se = batch_means(row, batches)
        out.append(LimitEstimate(tuple(th.tolist()), mean, se, row.size))
    return out


def limit_estimate(family_star: EnvFamily, theta_eval, chain_length: int,
                   rng: np.random.Generator, burn_in: float = 0.1,
                   batches: int = 50) -> LimitEstimate:
    """Estimate ℓ(θ_eval) = E*[φ_θ(Z̃_0, Z̃_1)] from one annealed chain under θ*."""
    from .bpre import simulate

    if chain_length < 1000:
        raise ValueError("chain_length must be at least 1000")
    z = simulate(family_star, chain_length, rng)
    return chain_estimates(family_star, theta_eval, z, burn_in, batches)[0]


def limit_contrast(family_star: EnvFamily, theta_a, theta_b, chain_length: int,
                   rng: np.random.Generator, burn_in: float = 0.1,
                   batches: int = 50) -> LimitEstimate:
    """ℓ(θ_a) - ℓ(θ_b) from a common chain, batch-means error of the difference."""
    from .bpre import simulate

    z = simulate(family_star, chain_length, rng).astype(float)
    start = int(burn_in * chain_length)
    xs, ys = z[start:-1], z[start + 1:]
    lw = log_weights(family_star, np.vstack([np.ravel(theta_a), np.ravel(theta_b)]), xs, ys)
    mean, se = batch_means(lw[0] - lw[1], batches)
    return LimitEstimate((tuple(np.ravel(theta_a)), tuple(np.ravel(theta_b))), mean, se, xs.size)


def walk_limit_estimate(crit_family: EnvFamily, pairs, theta=None,
                        batches: int = 50) -> LimitEstimate:
    """ℓ_n(θ)/n from one walk, with a batch-means error over sites."""
    pairs = np.asarray(pairs)
    th = crit_family.theta if theta is None else np.ravel(theta)
    summ = phi(crit_family, pairs[:, 0], pairs[:, 1], th)
    mean, se = batch_means(summ, batches)
    return LimitEstimate(tuple(th.tolist()), mean, se, pairs.shape[0])


def running_criterion(family_star: EnvFamily, checkpoints, chains: int,
                      rng: np.random.Generator, theta=None) -> np.ndarray:
    """Running normalised criterion (1/n) Σ_{k<n} φ_θ(Z_k, Z_{k+1}) at checkpoints.

    Returns an array of shape ``(chains, len(checkpoints))`` computed on
    independent annealed chains (vectorised negative-binomial generations).
    """
    from .bpre import simulate_many_negbin

    checkpoints = np.asarray(checkpoints, dtype=int)
    th = family_star.theta if theta is None else np.ravel(theta)
    z = simulate_many_negbin(family_star, int(checkpoints.max()), chains, rng)
    summ = log_weights(family_star, th[None, :], z[:, :-1], z[:, 1:])[0]
    cums = np.cumsum(summ, axis=1)
    return cums[:, checkpoints - 1] / checkpoints


def divergence_diagnostic(family_star: EnvFamily, checkpoints, chains: int,
                          rng: np.random.Generator) -> dict:
    """Typical (median over chains) running criterion and whether it keeps falling."""
    runs = running_criterion(family_star, checkpoints, chains, rng)
    med = np.median(runs, axis=0)
    single = np.all(np.diff(runs, axis=1) < 0, axis=1)
    return {
        "checkpoints": list(map(int, checkpoints)),
        "median": med.tolist(),
        "strictly_decreasing": bool(np.all(np.diff(med) < 0)),
        "single_chain_decreasing_fraction": float(single.mean()),
    }
