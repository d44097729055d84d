"""Maximisation of the criterion over a compact box.

Stage one scans a regular grid; stage two refines from the grid argmax by
golden-section search (one coordinate) or a box-clamped Nelder-Mead
simplex (two or three coordinates).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .env_model import ThetaBox
from .errors import NonFinite
from .likelihood import Criterion

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class MleOptions:
    grid_points: int = 32
    max_evals: int = 10_000
    tol: float = 1e-6
    boundary_tol: float = 1e-6


@dataclass
class MleResult:
    theta_hat: np.ndarray
    criterion_at_max: float
    evaluations: int
    converged: bool
    on_boundary: bool
    grid_stage_argmax: np.ndarray
    best_history: list = field(default_factory=list, repr=False)


class _Objective:
    """Counts evaluations; infeasible points score -inf."""

    def __init__(self, crit: Criterion, box: ThetaBox):
        self.crit = crit
        self.box = box
        self.family = crit.family
        self.evals = 0
        self.best = -math.inf
        self.best_theta = None

    def many(self, thetas: np.ndarray) -> np.ndarray:
        thetas = np.atleast_2d(thetas)
        ok = np.array([self.family.feasible(t) for t in thetas], dtype=bool)
        out = np.full(thetas.shape[0], -math.inf)
        if ok.any():
            out[ok] = self.crit.values(thetas[ok])
        self.evals += thetas.shape[0]
        for t, v in zip(thetas, out):
            if v > self.best:
                self.best, self.best_theta = float(v), t.copy()
        return out

    def __call__(self, theta) -> float:
        return float(self.many(np.asarray(theta, dtype=float)[None, :])[0])


def grid_search(obj: _Objective, box: ThetaBox, points: int):
    axes = [np.linspace(lo, hi, points) for lo, hi in zip(box.lower, box.upper)]
    # itertools.product runs in lexicographic order, so np.argmax breaks
    # ties toward the lowest lexicographic grid point
    grid = np.array(list(itertools.product(*axes)), dtype=float)
    vals = obj.many(grid)
    if not np.any(np.isfinite(vals)):
        raise NonFinite("criterion is -inf on the whole grid")
    i = int(np.argmax(vals))
    return grid[i], float(vals[i]), axes


def golden_section(f, lo: float, hi: float, tol: float, max_evals: int):
    """Maximise a unimodal ``f`` on [lo, hi]; returns (x, f(x), evals, converged)."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    evals = 2
    while b - a > tol and evals < max_evals:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        evals += 1
    x, fx = (c, fc) if fc >= fd else (d, fd)
    return x, fx, evals, b - a <= tol


def nelder_mead(obj: _Objective, x0, step, box: ThetaBox, tol: float, max_evals: int):
    """Box-clamped Nelder-Mead maximiser.

    Probe points are clipped into the box. Stops when every vertex is
    within ``tol`` (relative to the box width, per coordinate) of the best
    vertex. Returns (x, f, converged, best_history).
    """
    start_evals = obj.evals
    lo, hi, width = box.lo, box.hi, box.width
    width = np.where(width > 0, width, 1.0)
    d = x0.size
    simplex = [x0.copy()]
    for j in range(d):
        v = x0.copy()
        v[j] = v[j] + step[j] if v[j] + step[j] <= hi[j] else v[j] - step[j]
        simplex.append(v)
    simplex = np.clip(np.array(simplex), lo, hi)
    fvals = obj.many(simplex)
    history = [float(fvals.max())]
    converged = False
    while True:
        order = np.argsort(-fvals, kind="stable")
        simplex, fvals = simplex[order], fvals[order]
        history.append(float(fvals[0]))
        if np.max(np.abs(simplex[1:] - simplex[0]) / width) < tol:
            converged = True
            break
        if obj.evals - start_evals >= max_evals:
            break
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = np.clip(centroid + (centroid - worst), lo, hi)
        fr = obj(xr)
        if fr > fvals[0]:
            xe = np.clip(centroid + 2.0 * (centroid - worst), lo, hi)
            fe = obj(xe)
            simplex[-1], fvals[-1] = (xe, fe) if fe > fr else (xr, fr)
            continue
        if fr > fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
            continue
        if fr > fvals[-1]:
            xc = np.clip(centroid + 0.5 * (xr - centroid), lo, hi)
            fc = obj(xc)
            if fc >= fr:
                simplex[-1], fvals[-1] = xc, fc
                continue
        else:
            xc = np.clip(centroid + 0.5 * (worst - centroid), lo, hi)
            fc = obj(xc)
            if fc > fvals[-1]:
                simplex[-1], fvals[-1] = xc, fc
                continue
        simplex[1:] = simplex[0] + 0.5 * (simplex[1:] - simplex[0])
        fvals[1:] = obj.many(simplex[1:])
    return simplex[0], float(fvals[0]), converged, history


def maximize(crit: Criterion, box: ThetaBox | None = None,
             options: MleOptions | None = None) -> MleResult:
    """θ̂_n ∈ argmax over the box of ℓ_n(θ).

    ``options.max_evals`` bounds the refinement stage; the grid stage always
    costs ``grid_points ** dim`` evaluations.
    """
    box = crit.family.box if box is None else box
    opts = options or MleOptions()
    obj = _Objective(crit, box)
    g_arg, g_val, axes = grid_search(obj, box, opts.grid_points)
    width = box.width
    if box.dim == 1:
        ax = axes[0]
        i = int(np.searchsorted(ax, g_arg[0]))
        a, b = ax[max(i - 1, 0)], ax[min(i + 1, ax.size - 1)]
        f1 = lambda t: obj(np.array([t]))
        x, fx, _, converged = golden_section(f1, a, b, opts.tol * width[0], opts.max_evals)
        theta, val = (np.array([x]), fx) if fx > g_val else (g_arg.copy(), g_val)
        history = [g_val, max(fx, g_val)]
    else:
        step = np.array([ax[1] - ax[0] if ax.size > 1 else 0.0 for ax in axes])
        theta, val, converged, history = nelder_mead(obj, g_arg, step, box, opts.tol,
                                                     opts.max_evals)
        if val < g_val:
            theta, val = g_arg.copy(), g_val
    edge = np.minimum(theta - box.lo, box.hi - theta)
    on_boundary = bool(np.any(edge <= opts.boundary_tol * width))
    return MleResult(theta_hat=theta, criterion_at_max=float(val), evaluations=obj.evals,
                     converged=bool(converged), on_boundary=on_boundary,
                     grid_stage_argmax=g_arg, best_history=history)


def profile_slice(crit: Criterion, box: ThetaBox, axis: int, resolution: int,
                  center=None) -> np.ndarray:
    """Criterion along one coordinate, others fixed at ``center`` (default θ̂).

    Returns an array of shape ``(resolution, 2)`` with columns (θ_axis, ℓ_n).
    """
    if not 0 <= axis < box.dim:
        raise ValueError(f"axis {axis} out of range for a {box.dim}-d box")
    if center is None:
        center = maximize(crit, box).theta_hat
    ts = np.linspace(box.lower[axis], box.upper[axis], resolution)
    thetas = np.repeat(np.asarray(center, dtype=float)[None, :], resolution, axis=0)
    thetas[:, axis] = ts
    feas = np.array([crit.family.feasible(t) for t in thetas])
    vals = np.full(resolution, -math.inf)
    if feas.any():
        vals[feas] = crit.values(thetas[feas])
    return np.column_stack([ts, vals])
