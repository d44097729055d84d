"""Branching process with one immigrant per generation and geometric offspring.

Under the annealed law the left-step counts ``L_n^n, ..., L_0^n`` of the
walk have the law of ``Z_0, ..., Z_n`` below, a homogeneous Markov chain
with kernel ``Q(x, y) = C(x+y, x) exp(phi(x, y))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats
from scipy.special import gammaln

from . import _backend
from .env_model import BetaEnv, EnvFamily, TwoPointFree, TwoPointKnown, classify_regime
from .errors import PopulationExplosion, RegimeError, SeriesDivergence
from .likelihood import phi

POPULATION_CAP = 10**7
CHUNK = 1 << 14
SERIES_TOL = 1e-12
SERIES_MAX_TERMS = 100_000
# above this many parents the negative-binomial draw uses its normal limit
NEGBIN_EXACT_LIMIT = 1e12


def log_kernel(family: EnvFamily, x, y):
    """log Q_θ(x, y) = log C(x+y, x) + φ_θ(x, y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = gammaln(x + y + 1.0) - gammaln(x + 1.0) - gammaln(y + 1.0) + phi(family, x, y)
    return out if out.ndim else float(out)


def kernel_row_tail(family: EnvFamily, x: int, y_max: int) -> float:
    """Σ_{y > y_max} Q_θ(x, y), from the negative-binomial survival function.

    Given ω = a the row is NB(x+1, a); the tail is averaged over ν_θ
    directly (two-point) or by adaptive quadrature (Beta).
    """
    if isinstance(family, (TwoPointKnown, TwoPointFree)):
        p, a1, a2 = family.p, family.a1, family.a2
        return float(p * stats.nbinom.sf(y_max, x + 1, a1)
                     + (1 - p) * stats.nbinom.sf(y_max, x + 1, a2))
    if isinstance(family, BetaEnv):
        dens = stats.beta(family.alpha, family.beta).pdf
        val, _ = integrate.quad(lambda a: dens(a) * stats.nbinom.sf(y_max, x + 1, a),
                                0.0, 1.0, epsabs=1e-16, epsrel=1e-10, limit=200)
        return float(val)
    raise TypeError(f"unsupported family {type(family).__name__}")


def kernel_row_cutoff(family: EnvFamily, x: int, tail_tol: float = 1e-12) -> int:
    """Smallest power-of-two row cutoff whose tail mass is below ``tail_tol``."""
    y = 16
    while kernel_row_tail(family, x, y) >= tail_tol:
        y *= 2
        if y > 1 << 26:
            raise RuntimeError("kernel row tail does not decay")
    return y


def simulate_quenched(omega: np.ndarray, rng: np.random.Generator,
                      cap: int = POPULATION_CAP) -> np.ndarray:
    """Run ``Z_{k+1} = Σ_{i=0}^{Z_k} ξ_{k+1,i}`` with ξ ~ Geom(omega[k]) on N.

    ``omega[k]`` is the environment of generation ``k+1``. Each offspring
    count is one inversion draw ``floor(log V / log(1-ω))``.
    """
    omega = np.ascontiguousarray(omega, dtype=np.float64)
    n = omega.size
    z = np.zeros(n + 1, dtype=np.int64)
    k = 0
    while k < n:
        need = int(z[k]) + 1
        u = rng.random(max(CHUNK, need))
        k, _, status = _backend.bpre_chunk(omega, z, k, u, cap)
        if status == 2:
            raise PopulationExplosion(f"Z_{k} = {z[k]} exceeds cap {cap}")
    return z


def simulate(family: EnvFamily, n: int, rng: np.random.Generator,
             cap: int = POPULATION_CAP) -> np.ndarray:
    """Annealed chain Z_0 = 0, ..., Z_n with a fresh environment ω_1..ω_n."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    omega = family.sample(n, rng)
    return simulate_quenched(omega, rng, cap)


def simulate_many_negbin(family: EnvFamily, n: int, chains: int,
                         rng: np.random.Generator) -> np.ndarray:
    """``chains`` independent annealed chains, vectorised across chains.

    Generation sums are drawn as NB(Z_k + 1, ω) in one go, which has the
    same law as the per-individual geometric draws. Populations above
    ``NEGBIN_EXACT_LIMIT`` use the normal limit of that NB law, so this is
    usable for sub-ballistic families whose populations blow up. Returns a
    float array of shape ``(chains, n + 1)``.
    """
    z = np.zeros((chains, n + 1))
    for k in range(n):
        w = family.sample(chains, rng)
        m = z[:, k] + 1.0
        big = m >= NEGBIN_EXACT_LIMIT
        nxt = np.empty(chains)
        if (~big).any():
            nxt[~big] = rng.negative_binomial(m[~big], w[~big])
        if big.any():
            wb = w[big]
            mean = m[big] * (1.0 - wb) / wb
            sd = np.sqrt(mean / wb)
            nxt[big] = np.maximum(0.0, np.rint(mean + sd * rng.standard_normal(big.sum())))
        z[:, k + 1] = nxt
    return z


def stationary_mean(family: EnvFamily) -> float:
    """Σ_k k π(k) = Σ_{n>=1} (Eρ)^n."""
    er = family.rho_mean()
    if er >= 1.0:
        return math.inf
    return er / (1.0 - er)


@dataclass(frozen=True)
class StationaryLaw:
    """Monte Carlo estimate of π(k) = E[S (1-S)^k], k = 0..k_max."""

    probs: np.ndarray
    stderr: np.ndarray
    tail: np.ndarray  # estimate of P(Z > k)
    mean: float
    mean_stderr: float
    mc_samples: int
    series_tol: float
    s_samples: np.ndarray

    @property
    def k_max(self) -> int:
        return self.probs.size - 1


def sample_s(family: EnvFamily, size: int, rng: np.random.Generator,
             series_tol: float = SERIES_TOL, max_terms: int = SERIES_MAX_TERMS) -> np.ndarray:
    """Draws of S = (1 + ρ_1 + ρ_1ρ_2 + ...)^{-1}, truncated once the running product < tol."""
    total = np.ones(size)
    prod = np.ones(size)
    active = np.arange(size)
    terms = 0
    while active.size:
        if terms >= max_terms:
            raise SeriesDivergence(
                f"{active.size} series still above {series_tol} after {max_terms} terms")
        w = family.sample(active.size, rng)
        prod[active] *= (1.0 - w) / w
        total[active] += prod[active]
        active = active[prod[active] >= series_tol]
        terms += 1
    return 1.0 / total


def stationary_pi(family: EnvFamily, k_max: int, rng: np.random.Generator,
                  mc_samples: int = 100_000, series_tol: float = SERIES_TOL) -> StationaryLaw:
    regime = classify_regime(family)
    if not regime.transient_right:
        raise RegimeError(f"stationary law needs a right-transient family, got {regime.tag.value}")
    s = sample_s(family, mc_samples, rng, series_tol)
    k = np.arange(k_max + 1)
    log1ms = np.log1p(-s)
    per = s[:, None] * np.exp(np.outer(log1ms, k))
    probs = per.mean(axis=0)
    stderr = per.std(axis=0, ddof=1) / math.sqrt(mc_samples)
    tail = np.exp(np.outer(log1ms, k + 1)).mean(axis=0)
    m = (1.0 - s) / s
    return StationaryLaw(probs=probs, stderr=stderr, tail=tail, mean=float(m.mean()),
                         mean_stderr=float(m.std(ddof=1) / math.sqrt(mc_samples)),
                         mc_samples=mc_samples, series_tol=series_tol, s_samples=s)


def invariance_check(law: StationaryLaw, family: EnvFamily, x_max: int = 30, y_max: int = 10):
    """Compare Σ_{x<=x_max} π̂(x) Q(x, y) with π̂(y) for y <= y_max.

    Returns ``(lhs, rhs, combined_stderr)``; both sides are per-sample
    averages over the same S draws, standard errors combined in quadrature.
    """
    s = law.s_samples
    xs = np.arange(x_max + 1)
    ys = np.arange(y_max + 1)
    q = np.exp(log_kernel(family, xs[:, None], ys[None, :]))
    log1ms = np.log1p(-s)
    pis_x = s[:, None] * np.exp(np.outer(log1ms, xs))
    pis_y = s[:, None] * np.exp(np.outer(log1ms, ys))
    push = pis_x @ q
    nmc = s.size
    lhs = push.mean(axis=0)
    rhs = pis_y.mean(axis=0)
    se = np.sqrt(push.var(axis=0, ddof=1) / nmc + pis_y.var(axis=0, ddof=1) / nmc)
    return lhs, rhs, se
