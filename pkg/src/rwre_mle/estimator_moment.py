"""History-conditioned moment estimator for the one-dimensional walk.

The history of a site is ``h = (h_-, h_+)``, the numbers of left and right
steps already made from it. For each ``h`` we count how often the next move
from a site carrying that history went left or right; these proportions
estimate the annealed probabilities

    V_1(h)  = E[ω^{1+h_+} (1-ω)^{h_-}] / E[ω^{h_+} (1-ω)^{h_-}],
    V_-1(h) = 1 - V_1(h),

which are then inverted for the family parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import EmptyHistory, NonInvertible
from .rwre_sim import HistoryLog


@dataclass(frozen=True)
class HistoryStats:
    """``counts[(h_minus, h_plus)] = (n_left, n_right)``."""

    counts: dict

    def m(self, h) -> int:
        left, right = self.counts.get(tuple(h), (0, 0))
        return left + right

    @property
    def total(self) -> int:
        return sum(l + r for l, r in self.counts.values())


@dataclass
class MomentResult:
    theta_tilde: np.ndarray
    v_hats_used: list
    invertible: bool = True
    clamped: bool = False
    notes: list = field(default_factory=list)


def history_stats(log: HistoryLog) -> HistoryStats:
    """Tally every move under the history its site carried just before it.

    Moves are grouped by site with a stable sort, so each site's moves stay
    in time order; running counts within a group give the history.
    """
    pos = np.asarray(log.positions)
    mv = np.asarray(log.moves)
    if pos.size == 0:
        return HistoryStats({})
    order = np.argsort(pos, kind="stable")
    ps, ms = pos[order], mv[order]
    is_left = (ms < 0).astype(np.int64)
    is_right = 1 - is_left
    starts = np.r_[0, np.flatnonzero(np.diff(ps)) + 1]
    group_len = np.diff(np.r_[starts, ps.size])
    cl = np.cumsum(is_left) - is_left
    cr = np.cumsum(is_right) - is_right
    h_minus = cl - np.repeat(cl[starts], group_len)
    h_plus = cr - np.repeat(cr[starts], group_len)
    keys = np.stack([h_minus, h_plus, is_right], axis=1)
    uniq, cnt = np.unique(keys, axis=0, return_counts=True)
    counts: dict = {}
    for (hm, hp, right), c in zip(uniq.tolist(), cnt.tolist()):
        l, r = counts.get((hm, hp), (0, 0))
        counts[(hm, hp)] = (l, r + c) if right else (l + c, r)
    return HistoryStats(counts)


def v_hat(stats: HistoryStats, h, eps: int) -> tuple[Fraction, int]:
    """Observed proportion of moves ``eps`` (+1 or -1) from history ``h``, and its sample size."""
    if eps not in (1, -1):
        raise ValueError("eps must be +1 or -1")
    left, right = stats.counts.get(tuple(h), (0, 0))
    m = left + right
    if m == 0:
        raise EmptyHistory(f"no observed move from history {tuple(h)}")
    return Fraction(right if eps == 1 else left, m), m


def invert_two_point_known_moments(v1, a1: float, a2: float) -> tuple[float, bool]:
    """p from V_1(0,0) = p a1 + (1-p) a2, clamped to [0, 1]; returns (p, clamped)."""
    p = (a2 - float(v1)) / (a2 - a1)
    if p < 0.0:
        return 0.0, True
    if p > 1.0:
        return 1.0, True
    return p, False


def invert_two_point_known(stats: HistoryStats, a1: float, a2: float) -> MomentResult:
    v, m = v_hat(stats, (0, 0), 1)
    p, clamped = invert_two_point_known_moments(v, a1, a2)
    return MomentResult(np.array([p]), [((0, 0), 1, float(v), m)], True, clamped)


def invert_beta_moments(u, v) -> tuple[float, float]:
    """(α, β) from u = V_-1(0,0) = β/(α+β) and v = V_-1(1,0) = (β+1)/(α+β+1)."""
    if v <= u:
        raise NonInvertible(f"need V_-1(1,0) > V_-1(0,0), got {float(v)} <= {float(u)}")
    s = (1 - v) / (v - u)
    return float((1 - u) * s), float(u * s)


def invert_beta(stats: HistoryStats) -> MomentResult:
    u, mu = v_hat(stats, (0, 0), -1)
    v, mv = v_hat(stats, (1, 0), -1)
    alpha, beta = invert_beta_moments(u, v)
    used = [((0, 0), -1, float(u), mu), ((1, 0), -1, float(v), mv)]
    return MomentResult(np.array([alpha, beta]), used, invertible=alpha > 0 and beta > 0)


def forward_moments_two_point_known(p: float, a1: float, a2: float) -> float:
    return p * a1 + (1 - p) * a2


def forward_moments_beta(alpha: float, beta: float) -> tuple[float, float]:
    return beta / (alpha + beta), (beta + 1) / (alpha + beta + 1)


def forward_moments_two_point_free(p: float, a1: float, a2: float) -> tuple[float, float, float]:
    """(V_1(0,0), V_1(0,1), V_1(0,2)) for the two-point law with free support.

    Each is a ratio of consecutive moments E[ω^{k+1}] / E[ω^k].
    """
    m1 = p * a1 + (1 - p) * a2
    m2 = p * a1**2 + (1 - p) * a2**2
    m3 = p * a1**3 + (1 - p) * a2**3
    return m1, m2 / m1, m3 / m2
