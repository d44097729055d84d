"""Compiled vs pure-Python kernels on the two hot loops.

    python benchmarks/bench_kernels.py [--n 20000] [--repeat 3]

Both backends consume the same uniform buffers, so the outputs are also
compared for equality.
"""

import argparse
import time

import numpy as np

from rwre_mle import _pykernels
from rwre_mle.env_model import TwoPointKnown, sample_env

try:
    from rwre_mle import _ckernels
except ImportError:
    _ckernels = None


def bench_walk(mod, env, n, u):
    out = np.empty(u.size, dtype=np.int64)
    t0 = time.perf_counter()
    used, x, status = mod.walk_chunk(env.omega, env.offset, 0, n, u, out)
    return time.perf_counter() - t0, out[:used].copy(), status


def bench_bpre(mod, omega, u):
    z = np.zeros(omega.size + 1, dtype=np.int64)
    t0 = time.perf_counter()
    mod.bpre_chunk(omega, z, 0, u, 10**7)
    return time.perf_counter() - t0, z


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _ckernels is None:
        raise SystemExit("compiled extension not built; run pip install -e . first")
    fam = TwoPointKnown(0.4, 0.7, 0.3)
    rng = np.random.default_rng(0)
    env = sample_env(fam, (-args.n, args.n), rng)
    u = rng.random(10 * args.n)
    omega = fam.sample(args.n, rng)
    ub = rng.random(6 * args.n)

    rows = []
    for name, fn, a in (("walk_chunk", bench_walk, (env, args.n, u)),
                        ("bpre_chunk", bench_bpre, (omega, ub))):
        tc = min(fn(_ckernels, *a)[0] for _ in range(args.repeat))
        tp = min(fn(_pykernels, *a)[0] for _ in range(args.repeat))
        same = all(np.array_equal(x, y) for x, y in
                   zip(fn(_ckernels, *a)[1:2], fn(_pykernels, *a)[1:2]))
        rows.append((name, tc, tp, same))
    print(f"{'kernel':12s} {'cython s':>10s} {'python s':>10s} {'speedup':>8s}  equal")
    for name, tc, tp, same in rows:
        print(f"{name:12s} {tc:10.4f} {tp:10.4f} {tp / tc:8.0f}x  {same}")


if __name__ == "__main__":
    main()
