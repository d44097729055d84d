"""Quenched nearest-neighbour walk run until it first hits site ``n``."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np

from . import _backend
from .env_model import EnvFamily, Environment, classify_regime, hitting_time_limit
from .errors import RangeExceeded, StepBudgetExceeded

# Uniforms are drawn in fixed-size blocks so the consumed stream does not
# depend on the target site (successive stopping relies on this).
CHUNK = 1 << 16
FALLBACK_MAX_STEPS = 10**8


@dataclass(frozen=True)
class StepCounts:
    """Left/right step counts per site up to the hitting time of ``n``.

    ``left[i]`` and ``right[i]`` refer to site ``lowest_visited + i``; the
    arrays span ``[lowest_visited, n]``.
    """

    n: int
    t_n: int
    lowest_visited: int
    left: np.ndarray
    right: np.ndarray

    def L(self, x: int) -> int:
        i = x - self.lowest_visited
        return int(self.left[i]) if 0 <= i < self.left.size else 0

    def R(self, x: int) -> int:
        i = x - self.lowest_visited
        return int(self.right[i]) if 0 <= i < self.right.size else 0

    def nonnegative_left(self) -> np.ndarray:
        """L_x for x = 0..n."""
        return self.left[-self.lowest_visited:]


@dataclass(frozen=True)
class HistoryLog:
    """Position before each step and the step itself (+1/-1), in time order."""

    positions: np.ndarray
    moves: np.ndarray

    @property
    def t_n(self) -> int:
        return int(self.moves.size)

    def site_moves(self, x: int) -> np.ndarray:
        """Moves made from site ``x``, in the order the site was occupied."""
        return self.moves[self.positions == x]

    def per_site(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for x, m in zip(self.positions.tolist(), self.moves.tolist()):
            out.setdefault(x, []).append(m)
        return out


class Path:
    """A full walk trajectory ``X_0 = 0, ..., X_T`` stored as positions.

    One long path serves every intermediate stop: :meth:`step_counts` and
    :meth:`history` truncate at the first hitting time of the requested
    site.
    """

    def __init__(self, positions: np.ndarray):
        self.positions = np.asarray(positions, dtype=np.int64)
        self._moves = np.diff(self.positions).astype(np.int8)

    @property
    def length(self) -> int:
        return self._moves.size

    def hitting_time(self, n: int) -> int:
        hits = np.flatnonzero(self.positions == n)
        if hits.size == 0:
            raise ValueError(f"path never reaches site {n}")
        return int(hits[0])

    def history(self, n: int) -> HistoryLog:
        t = self.hitting_time(n)
        return HistoryLog(self.positions[:t], self._moves[:t])

    def step_counts(self, n: int) -> StepCounts:
        t = self.hitting_time(n)
        pos = self.positions[:t]
        mv = self._moves[:t]
        low = int(pos.min()) if t else 0
        low = min(low, 0)
        width = n - low + 1
        left = np.bincount(pos[mv < 0] - low, minlength=width).astype(np.int64)
        right = np.bincount(pos[mv > 0] - low, minlength=width).astype(np.int64)
        return StepCounts(n=int(n), t_n=t, lowest_visited=low, left=left, right=right)


def default_max_steps(family: EnvFamily | None, n: int) -> int:
    if family is not None and classify_regime(family).ballistic:
        return int(math.ceil(100 * n * hitting_time_limit(family)))
    return FALLBACK_MAX_STEPS


def walk_path(env: Environment, n: int, rng: np.random.Generator,
              max_steps: int | None = None) -> Path:
    """Simulate X until it first hits ``n``; one uniform per step."""
    if n <= 0:
        raise ValueError("target site must be positive")
    if not (env.x_min < 0 and n <= env.x_max):
        raise ValueError(f"site {n} and origin must lie inside [{env.x_min + 1}, {env.x_max}]")
    if max_steps is None:
        max_steps = FALLBACK_MAX_STEPS
    omega = env.omega
    offset = env.offset
    blocks = []
    x = 0
    total = 0
    while True:
        u = rng.random(CHUNK)
        out = np.empty(CHUNK, dtype=np.int64)
        used, x, status = _backend.walk_chunk(omega, offset, x, n, u, out)
        blocks.append(out[:used])
        total += used
        if status == 0:
            break
        if status == 2:
            raise RangeExceeded(f"walk reached lowest sampled site {env.x_min}")
        if total > max_steps:
            raise StepBudgetExceeded(f"no hit of site {n} within {max_steps} steps")
    if total > max_steps:
        raise StepBudgetExceeded(f"hitting time {total} exceeds budget {max_steps}")
    blocks.append(np.array([n], dtype=np.int64))
    return Path(np.concatenate(blocks))


def run_to_hit(env: Environment, n: int, rng: np.random.Generator,
               max_steps: int | None = None) -> tuple[StepCounts, HistoryLog]:
    path = walk_path(env, n, rng, max_steps)
    return path.step_counts(n), path.history(n)


def left_step_vector(counts: StepCounts) -> np.ndarray:
    """Pairs ``(L_{x+1}, L_x)`` for x = 0..n-1 as an ``(n, 2)`` int array."""
    lx = counts.nonnegative_left()
    return np.column_stack([lx[1:], lx[:-1]])


def write_trajectory(counts: StepCounts, seed, directory) -> None:
    """Dump ``counts.csv`` (site,left,right) and ``header.json``."""
    d = FsPath(directory)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "header.json", "w") as fh:
        json.dump({"n": counts.n, "t_n": counts.t_n, "seed": seed}, fh)
        fh.write("\n")
    with open(d / "counts.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["site", "left", "right"])
        for i, (l, r) in enumerate(zip(counts.left.tolist(), counts.right.tolist())):
            w.writerow([counts.lowest_visited + i, l, r])
