"""Time the numba kernels against their numpy twins, plus one end-to-end run
under each backend.

    python3 benchmarks/bench_kernels.py [--repeat N]

The end-to-end comparison starts a fresh interpreter with
GAUGE_CGM_DISABLE_NUMBA=1, since the flag is read at import time.
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from gauge_cgm import kernels
from gauge_cgm._jit import HAS_NUMBA
from gauge_cgm.atoms import LatentGroup


def best_of(fn, args, repeat):
    fn(*args)  # compile / warm caches
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(rng):
    n = 20_000
    scores = rng.standard_normal(2 * n)
    weights = rng.uniform(0.2, 1.0, 2 * n)
    u = rng.standard_normal(n)
    lg = LatentGroup(400, [rng.choice(400, 8, replace=False) for _ in range(300)])
    z = rng.standard_normal(400)
    v = rng.standard_normal(2000)
    w = rng.uniform(0.5, 2.0, 2000)
    x = np.zeros(400)
    x[:40] = rng.standard_normal(40)
    x[lg.counts == 0] = 0.0
    counts = np.maximum(lg.counts, 1.0)
    return {
        "argmax_ratio": (scores, weights),
        "signed_scores": (u,),
        "group_norms": (z, lg.idx, lg.ptr),
        "prox_sq_wl1": (v, w, 0.3),
        "latent_dr": (x, lg.idx, lg.ptr, counts, float(np.max(np.abs(x))), 1e-8, 500),
    }


END_TO_END = """
import time
from gauge_cgm.config import ExperimentConfig
from gauge_cgm.harness import run_experiment
cfg = ExperimentConfig(m=100, n=100, sparsity=5, eta=0.01, seed=1, lam=1e-2,
                       max_iter=3000, screen="safe")
run_experiment(cfg)
t0 = time.perf_counter()
run_experiment(cfg)
print(time.perf_counter() - t0)
"""


def end_to_end(disable):
    env = dict(os.environ)
    if disable:
        env["GAUGE_CGM_DISABLE_NUMBA"] = "1"
    else:
        env.pop("GAUGE_CGM_DISABLE_NUMBA", None)
    out = subprocess.run([sys.executable, "-c", END_TO_END], env=env,
                         capture_output=True, text=True, check=True)
    return float(out.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--skip-end-to-end", action="store_true")
    args = ap.parse_args(argv)

    if not HAS_NUMBA:
        print("numba unavailable or disabled; LOOP kernels run as plain python")
    rng = np.random.default_rng(0)
    print("%-14s %12s %12s %8s" % ("kernel", "loop [ms]", "numpy [ms]", "ratio"))
    for name, fargs in kernel_cases(rng).items():
        t_loop = best_of(kernels.LOOP[name], fargs, args.repeat)
        t_np = best_of(kernels.NUMPY[name], fargs, args.repeat)
        print("%-14s %12.4f %12.4f %8.2f" % (name, 1e3 * t_loop, 1e3 * t_np, t_np / t_loop))

    if not args.skip_end_to_end:
        t_jit = end_to_end(False)
        t_np = end_to_end(True)
        print("\nrun_experiment m=n=100, T=3000, safe screening")
        print("  numba  %.3f s\n  numpy  %.3f s\n  ratio  %.2f" % (t_jit, t_np, t_np / t_jit))


if __name__ == "__main__":
    main()
