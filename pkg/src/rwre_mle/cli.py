"""Command-line entry point.

Subcommands: simulate, estimate, moments, profile, bpre-check, replicate,
diagnose. Configuration comes from a JSON file (``--config``); flags
override config values. Seeds come from ``--seed``, then the
``RWRE_MLE_SEED`` environment variable, then are generated and printed.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import secrets
import sys
from pathlib import Path

import numpy as np

from . import bpre
from .env_model import classify_regime, default_sites, family_from_config, sample_env
from .errors import ConfigError, RwreError
from .estimator_mle import MleOptions, maximize, profile_slice
from .estimator_moment import history_stats
from .experiment import (ExperimentConfig, diagnostics, run_experiment, summarize,
                         write_estimates_csv, write_manifest, write_summary_csv)
from .likelihood import Criterion
from .rwre_sim import default_max_steps, left_step_vector, walk_path, write_trajectory

SUBCOMMANDS = ("simulate", "estimate", "moments", "profile", "bpre-check", "replicate", "diagnose")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _load_config(path) -> dict:
    if path is None:
        raise ConfigError("--config is required")
    with open(path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ConfigError("config file must hold a JSON object")
    # a bare family block is accepted as shorthand
    if "family" in cfg and isinstance(cfg["family"], str):
        cfg = {"family": cfg}
    return cfg


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("RWRE_MLE_SEED")
    if env:
        return int(env)
    seed = secrets.randbits(63)
    print(f"seed: {seed}")
    return seed


def _experiment_config(args, cfg: dict, seed: int) -> ExperimentConfig:
    cfg = dict(cfg)
    cfg["master_seed"] = seed
    if getattr(args, "reps", None) is not None:
        cfg["replications"] = args.reps
    if getattr(args, "n_grid", None):
        cfg["n_grid"] = args.n_grid
    mle = dict(cfg.get("mle", {}))
    for key in ("grid_points", "max_evals", "tol"):
        v = getattr(args, key, None)
        if v is not None:
            mle[key] = v
    if mle:
        cfg["mle"] = mle
    return ExperimentConfig.from_dict(cfg)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _single_walk(cfg: ExperimentConfig, n: int, seed: int):
    from .experiment import replication_rngs

    env_rng, walk_rng = replication_rngs(seed, 0)
    env = sample_env(cfg.family, (cfg.x_min, n), env_rng)
    return walk_path(env, n, walk_rng, default_max_steps(cfg.family, n))


def cmd_simulate(args, cfg):
    seed = _resolve_seed(args)
    ec = _experiment_config(args, cfg, seed)
    n = args.n or ec.n_grid[-1]
    counts = _single_walk(ec, n, seed).step_counts(n)
    out = _out_dir(args)
    write_trajectory(counts, seed, out)
    print(f"n={n} t_n={counts.t_n} T_n/n={counts.t_n / n:.4f}")


def cmd_estimate(args, cfg):
    seed = _resolve_seed(args)
    ec = _experiment_config(args, cfg, seed)
    n = args.n or ec.n_grid[-1]
    counts = _single_walk(ec, n, seed).step_counts(n)
    res = maximize(Criterion(ec.family, left_step_vector(counts)), ec.family.box, ec.mle)
    out = _out_dir(args)
    body = {"n": n, "t_n": counts.t_n, "seed": seed,
            "theta_hat": dict(zip(ec.family.param_names, res.theta_hat.tolist())),
            "criterion_at_max": res.criterion_at_max, "evaluations": res.evaluations,
            "converged": res.converged, "on_boundary": res.on_boundary}
    with open(out / "estimate.json", "w", encoding="utf-8") as fh:
        json.dump(body, fh, indent=2)
        fh.write("\n")
    print("theta_hat: " + ", ".join(f"{k}={v:.6g}" for k, v in body["theta_hat"].items()))


def cmd_moments(args, cfg):
    seed = _resolve_seed(args)
    ec = _experiment_config(args, cfg, seed)
    n = args.n or ec.n_grid[-1]
    stats = history_stats(_single_walk(ec, n, seed).history(n))
    out = _out_dir(args)
    with open(out / "moments.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["h_minus", "h_plus", "m", "v_left", "v_right"])
        for (hm, hp), (l, r) in sorted(stats.counts.items()):
            m = l + r
            w.writerow([hm, hp, m, repr(l / m), repr(r / m)])
    print(f"{len(stats.counts)} histories written")


def cmd_profile(args, cfg):
    seed = _resolve_seed(args)
    ec = _experiment_config(args, cfg, seed)
    n = args.n or ec.n_grid[-1]
    counts = _single_walk(ec, n, seed).step_counts(n)
    crit = Criterion(ec.family, left_step_vector(counts))
    names = ec.family.param_names
    axis = names.index(args.axis) if args.axis else 0
    sl = profile_slice(crit, ec.family.box, axis, args.resolution)
    out = _out_dir(args)
    with open(out / "profile.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theta", "criterion"])
        for t, v in sl.tolist():
            w.writerow([repr(t), repr(v)])
    print(f"profile over {names[axis]}: {args.resolution} points")


def cmd_bpre_check(args, cfg):
    seed = _resolve_seed(args)
    ec = _experiment_config(args, cfg, seed)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    law = bpre.stationary_pi(ec.family, args.kmax, rng, mc_samples=args.samples)
    out = _out_dir(args)
    with open(out / "bpre_pi.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "pi_hat", "stderr", "pi_tail_bound"])
        for k in range(law.k_max + 1):
            w.writerow([k, repr(float(law.probs[k])), repr(float(law.stderr[k])),
                        repr(float(law.tail[k]))])
    analytic = bpre.stationary_mean(ec.family)
    summary = {"mean_hat": law.mean, "mean_stderr": law.mean_stderr, "mean_analytic": analytic,
               "z_score": (law.mean - analytic) / law.mean_stderr if law.mean_stderr else None,
               "mc_samples": law.mc_samples, "series_tol": law.series_tol, "seed": seed}
    with open(out / "bpre_summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    print(f"stationary mean {law.mean:.4f} +/- {law.mean_stderr:.4f} (analytic {analytic:.4f})")


def cmd_replicate(args, cfg):
    seed = _resolve_seed(args)
    ec = _experiment_config(args, cfg, seed)
    records = run_experiment(ec, jobs=args.jobs)
    rows = summarize(records, ec.family.theta, policy=ec.outlier_policy)
    out = _out_dir(args)
    write_estimates_csv(records, out / "estimates.csv")
    write_summary_csv(rows, out / "summary.csv")
    write_manifest(ec, out / "manifest.json")
    last = ec.n_grid[-1]
    for r in rows:
        if r.n == last:
            print(f"n={r.n} {r.estimator:6s} {r.coord:5s} mean={r.mean:.4f} sd={r.sd:.4f} "
                  f"excluded={r.excluded}")


def cmd_diagnose(args, cfg):
    seed = _resolve_seed(args)
    ec = _experiment_config(args, cfg, seed)
    n_values = [args.n] if args.n else None
    rep = diagnostics(ec, n_values=n_values, reps=args.reps)
    out = _out_dir(args)
    with open(out / "diagnostics.json", "w", encoding="utf-8") as fh:
        json.dump({"regime": rep.regime, "ballistic": rep.ballistic, "failures": rep.failures,
                   "rows": [r.__dict__ for r in rep.rows]}, fh, indent=2)
        fh.write("\n")
    if not rep.ballistic:
        print(f"regime violation: {rep.regime}; no hitting-time limit comparison")
        return
    for r in rep.rows:
        print(f"n={r.n} mean T_n/n={r.mean_ratio:.4f} limit={r.limit:.4f} "
              f"rel_error={r.rel_error:+.4f}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rwre-mle", description=__doc__.split("\n\n")[0] + " Subcommands: "
                + ", ".join(SUBCOMMANDS) + ".")
    sub = p.add_subparsers(dest="command", metavar="{" + ",".join(SUBCOMMANDS) + "}",
                           parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", required=True, help="JSON config file")
        sp.add_argument("--seed", type=int, help="master seed (else $RWRE_MLE_SEED)")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("-v", "--verbose", action="count", default=0)
        sp.add_argument("--grid-points", dest="grid_points", type=int)
        sp.add_argument("--max-evals", dest="max_evals", type=int)
        sp.add_argument("--tol", type=float)

    handlers = {}
    for name, fn, helptext in (
        ("simulate", cmd_simulate, "simulate one walk and dump step counts"),
        ("estimate", cmd_estimate, "simulate one walk and compute the MLE"),
        ("moments", cmd_moments, "history statistics of one walk"),
        ("profile", cmd_profile, "criterion along one parameter axis"),
        ("bpre-check", cmd_bpre_check, "stationary law of the branching chain"),
        ("replicate", cmd_replicate, "replication harness over the n-grid"),
        ("diagnose", cmd_diagnose, "hitting-time diagnostics"),
    ):
        sp = sub.add_parser(name, help=helptext)
        common(sp)
        handlers[name] = fn
        if name in ("simulate", "estimate", "moments", "profile", "diagnose"):
            sp.add_argument("--n", type=int, help="target site")
        if name in ("replicate", "diagnose"):
            sp.add_argument("--reps", type=int)
        if name == "replicate":
            sp.add_argument("--n-grid", dest="n_grid", type=int, nargs="+")
            sp.add_argument("--jobs", type=int, default=1)
        if name == "profile":
            sp.add_argument("--axis", help="parameter name (default: first)")
            sp.add_argument("--resolution", type=int, default=101)
        if name == "bpre-check":
            sp.add_argument("--kmax", type=int, default=20)
            sp.add_argument("--samples", type=int, default=100_000)
    p.set_defaults(handlers=handlers)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not args.command:
        parser.print_usage(sys.stderr)
        return 1
    try:
        cfg = _load_config(args.config)
        args.handlers[args.command](args, cfg)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RwreError as exc:
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
