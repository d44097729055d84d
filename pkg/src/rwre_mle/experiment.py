"""Replication harness: one environment and one walk per replication,
stopped successively at each hitting time of the n-grid, with both
estimators run at every stop.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import metadata

import numpy as np

from .env_model import (DEFAULT_X_MIN, BetaEnv, EnvFamily, TwoPointFree, TwoPointKnown,
                        classify_regime, family_from_config, hitting_time_limit, sample_env)
from .errors import ConfigError, EmptyHistory, NonInvertible, RwreError
from .estimator_mle import MleOptions, maximize
from .estimator_moment import history_stats, invert_beta, invert_two_point_known
from .likelihood import Criterion
from .rwre_sim import default_max_steps, left_step_vector, walk_path

DEFAULT_N_GRID = tuple(1000 * k for k in range(1, 11))
ESTIMATORS = ("mle", "moment")


@dataclass(frozen=True)
class OutlierPolicy:
    exclude_boundary: bool = True
    caps: dict = field(default_factory=lambda: {"alpha": 10.0, "beta": 3.0})

    def to_dict(self):
        return {"exclude_boundary": self.exclude_boundary, "caps": dict(self.caps)}


@dataclass(frozen=True)
class ExperimentConfig:
    family: EnvFamily
    n_grid: tuple = DEFAULT_N_GRID
    replications: int = 1000
    master_seed: int = 0
    estimators: tuple = ESTIMATORS
    x_min: int = DEFAULT_X_MIN
    outlier_policy: OutlierPolicy = field(default_factory=OutlierPolicy)
    mle: MleOptions = field(default_factory=MleOptions)

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] < 1:
            raise ConfigError("n_grid must be a strictly increasing list of positive integers")
        object.__setattr__(self, "n_grid", grid)
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown:
            raise ConfigError(f"unknown estimators {sorted(unknown)}")
        if "moment" in self.estimators and isinstance(self.family, TwoPointFree):
            raise ConfigError("no moment inversion is available for the two_point_free family")
        if self.x_min >= 0:
            raise ConfigError("x_min must be negative")

    def to_dict(self) -> dict:
        return {
            "family": self.family.to_config(),
            "n_grid": list(self.n_grid),
            "replications": self.replications,
            "master_seed": self.master_seed,
            "estimators": list(self.estimators),
            "x_min": self.x_min,
            "outlier_policy": self.outlier_policy.to_dict(),
            "mle": {"grid_points": self.mle.grid_points, "max_evals": self.mle.max_evals,
                    "tol": self.mle.tol},
        }

    @classmethod
    def from_dict(cls, cfg: dict) -> "ExperimentConfig":
        cfg = dict(cfg)
        allowed = {"family", "n_grid", "replications", "master_seed", "estimators",
                   "x_min", "outlier_policy", "mle"}
        unknown = set(cfg) - allowed
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "family" not in cfg:
            raise ConfigError("config needs a 'family' block")
        kw = {"family": family_from_config(cfg.pop("family"))}
        if "outlier_policy" in cfg:
            op = dict(cfg.pop("outlier_policy"))
            bad = set(op) - {"exclude_boundary", "caps"}
            if bad:
                raise ConfigError(f"unknown outlier_policy fields: {sorted(bad)}")
            kw["outlier_policy"] = OutlierPolicy(**op)
        if "mle" in cfg:
            mo = dict(cfg.pop("mle"))
            bad = set(mo) - {"grid_points", "max_evals", "tol"}
            if bad:
                raise ConfigError(f"unknown mle fields: {sorted(bad)}")
            kw["mle"] = MleOptions(**mo)
        if "estimators" in cfg:
            kw["estimators"] = tuple(cfg.pop("estimators"))
        elif isinstance(kw["family"], TwoPointFree):
            kw["estimators"] = ("mle",)
        if "n_grid" in cfg:
            kw["n_grid"] = tuple(cfg.pop("n_grid"))
        kw.update(cfg)
        return cls(**kw)


@dataclass
class EstimateRecord:
    rep: int
    n: int
    t_n: int
    estimator: str
    coords: tuple
    theta: tuple
    flag: str = ""
    wall_time: float = 0.0


def replication_rngs(master_seed: int, index: int):
    """Independent (environment, walk) generators for one replication."""
    ss = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, int(index)])
    env_ss, walk_ss = ss.spawn(2)
    return np.random.default_rng(env_ss), np.random.default_rng(walk_ss)


def _moment(family, log):
    stats = history_stats(log)
    if isinstance(family, TwoPointKnown):
        res = invert_two_point_known(stats, family.a1, family.a2)
        return res.theta_tilde, "clamped" if res.clamped else ""
    if isinstance(family, BetaEnv):
        res = invert_beta(stats)
        return res.theta_tilde, "" if res.invertible else "noninvertible"
    raise ConfigError(f"no moment inversion for {family.name}")


def run_replication(config: ExperimentConfig, index: int) -> list[EstimateRecord]:
    fam = config.family
    coords = fam.param_names
    nan = tuple(math.nan for _ in coords)
    env_rng, walk_rng = replication_rngs(config.master_seed, index)
    n_max = config.n_grid[-1]
    records = []
    try:
        env = sample_env(fam, (config.x_min, n_max), env_rng)
        path = walk_path(env, n_max, walk_rng, default_max_steps(fam, n_max))
    except RwreError as exc:
        flag = f"failed:{type(exc).__name__}"
        return [EstimateRecord(index, n, -1, est, coords, nan, flag)
                for n in config.n_grid for est in config.estimators]
    for n in config.n_grid:
        counts = path.step_counts(n)
        for est in config.estimators:
            t0 = time.perf_counter()
            flag = ""
            try:
                if est == "mle":
                    res = maximize(Criterion(fam, left_step_vector(counts)), fam.box, config.mle)
                    theta = res.theta_hat
                    flag = "boundary" if res.on_boundary else ("" if res.converged else "nonconverged")
                else:
                    theta, flag = _moment(fam, path.history(n))
            except (EmptyHistory, NonInvertible) as exc:
                theta, flag = np.array(nan), f"failed:{type(exc).__name__}"
            records.append(EstimateRecord(index, n, counts.t_n, est, coords,
                                          tuple(float(v) for v in theta), flag,
                                          time.perf_counter() - t0))
    return records


def _run_one(args):
    cfg, idx = args
    return run_replication(cfg, idx)


def run_experiment(config: ExperimentConfig, jobs: int = 1, reps=None) -> list[EstimateRecord]:
    """All replications; output order is (rep, n, estimator) regardless of ``jobs``."""
    indices = range(config.replications) if reps is None else reps
    if jobs <= 1:
        chunks = [run_replication(config, i) for i in indices]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_one, [(config, i) for i in indices]))
    return [r for chunk in chunks for r in chunk]


@dataclass
class SummaryRow:
    n: int
    estimator: str
    coord: str
    truth: float
    n_raw: int
    n_used: int
    excluded: int
    mean: float
    bias: float
    variance: float
    sd: float
    q1: float
    median: float
    q3: float
    whisker_low: float
    whisker_high: float
    outliers: int


SUMMARY_FIELDS = list(SummaryRow.__dataclass_fields__)


def _excluded(rec: EstimateRecord, coord: str, value: float, policy: OutlierPolicy) -> bool:
    if not math.isfinite(value) or rec.flag.startswith("failed") or rec.flag == "noninvertible":
        return True
    if rec.estimator == "mle" and policy.exclude_boundary and rec.flag == "boundary":
        return True
    if rec.estimator == "moment" and coord in policy.caps and value > policy.caps[coord]:
        return True
    return False


def _box_stats(v: np.ndarray):
    q1, med, q3 = np.quantile(v, [0.25, 0.5, 0.75])
    iqr = q3 - q1
    lo_f, hi_f = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo_f) & (v <= hi_f)]
    return q1, med, q3, inside.min(), inside.max(), int(v.size - inside.size)


def summarize(records: list[EstimateRecord], theta_star, coords=None,
              policy: OutlierPolicy | None = None) -> list[SummaryRow]:
    """Per (n, estimator, coordinate) statistics after the outlier policy."""
    if not records:
        raise ValueError("no records to summarise")
    policy = policy or OutlierPolicy()
    coords = coords or records[0].coords
    truth = dict(zip(coords, np.ravel(theta_star).tolist()))
    groups: dict = {}
    for rec in records:
        for c, v in zip(rec.coords, rec.theta):
            g = groups.setdefault((rec.n, rec.estimator, c), [0, []])
            g[0] += 1
            if not _excluded(rec, c, v, policy):
                g[1].append(v)
    rows = []
    for (n, est, c) in sorted(groups, key=lambda k: (k[0], ESTIMATORS.index(k[1]), coords.index(k[2]))):
        raw, vals = groups[(n, est, c)]
        v = np.asarray(vals, dtype=float)
        if v.size:
            mean = float(v.mean())
            var = float(v.var(ddof=1)) if v.size > 1 else 0.0
            q1, med, q3, wl, wh, nout = _box_stats(v)
        else:
            mean = var = q1 = med = q3 = wl = wh = math.nan
            nout = 0
        rows.append(SummaryRow(n, est, c, truth[c], raw, int(v.size), raw - int(v.size), mean,
                               mean - truth[c], var, math.sqrt(var), float(q1), float(med),
                               float(q3), float(wl), float(wh), nout))
    return rows


ESTIMATE_FIELDS = ["rep", "n", "t_n", "estimator", "coord", "value", "flag"]


def write_estimates_csv(records, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ESTIMATE_FIELDS)
        for r in records:
            for c, v in zip(r.coords, r.theta):
                w.writerow([r.rep, r.n, r.t_n, r.estimator, c, repr(float(v)), r.flag])


def write_summary_csv(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v
                        for v in (getattr(row, f) for f in SUMMARY_FIELDS)])


def version_string() -> str:
    try:
        return "v" + metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "v0.0.0-unknown"


def write_manifest(config: ExperimentConfig, path, extra=None) -> None:
    """Config echo, version and seed; the timestamp sits alone on the last line."""
    from . import _backend

    body = {"version": version_string(), "master_seed": config.master_seed,
            "backend": _backend.BACKEND, "config": config.to_dict()}
    if extra:
        body.update(extra)
    text = json.dumps(body, indent=2, sort_keys=True)
    stamp = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text[:-2] + f',\n  "timestamp": "{stamp}"\n}}\n')


@dataclass
class DiagnosticRow:
    n: int
    reps: int
    mean_ratio: float
    sd_ratio: float
    limit: float
    rel_error: float
    hist_edges: list
    hist_counts: list


@dataclass
class DiagnosticReport:
    regime: str
    ballistic: bool
    rows: list
    failures: int = 0


def diagnostics(config: ExperimentConfig, n_values=None, reps: int | None = None,
                bins: int = 10) -> DiagnosticReport:
    """Hitting-time summary per n and comparison of mean(T_n/n) with its limit."""
    fam = config.family
    regime = classify_regime(fam)
    if not regime.ballistic:
        return DiagnosticReport(regime.tag.value, False, [])
    n_values = tuple(n_values or config.n_grid)
    reps = reps or config.replications
    limit = hitting_time_limit(fam)
    n_max = max(n_values)
    ratios = {n: [] for n in n_values}
    failures = 0
    for i in range(reps):
        env_rng, walk_rng = replication_rngs(config.master_seed, i)
        try:
            env = sample_env(fam, (config.x_min, n_max), env_rng)
            path = walk_path(env, n_max, walk_rng, default_max_steps(fam, n_max))
        except RwreError:
            failures += 1
            continue
        for n in n_values:
            ratios[n].append(path.hitting_time(n) / n)
    rows = []
    for n in n_values:
        r = np.asarray(ratios[n])
        counts, edges = np.histogram(r * n, bins=bins)
        mean = float(r.mean())
        rows.append(DiagnosticRow(n, r.size, mean, float(r.std(ddof=1)) if r.size > 1 else 0.0,
                                  limit, mean / limit - 1.0, edges.tolist(), counts.tolist()))
    return DiagnosticReport(regime.tag.value, True, rows, failures)
