"""Compare the numba kernels with the numpy fallback.

The backend is fixed at import time by MCCM_BACKEND, so each backend runs in
its own interpreter.  Usage: python benchmarks/bench_backends.py [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
from mccm import kernels, montecarlo as mc
from mccm.cascade import sample_field
from mccm.weights import Discrete, LogNormal, ModelSpec

repeat = int(sys.argv[1])
ln = ModelSpec(LogNormal(0.6), 2)
disc = ModelSpec(Discrete([(1.5, 0.5), (0.5, 0.5)]), 3)
cases = {
    "field lognormal b=2 depth=20": lambda: sample_field(ln, 20, 1),
    "field discrete b=3 depth=12": lambda: sample_field(disc, 12, 1),
    "coefficients 2000 reps depth=10": lambda: mc.coefficient_samples(ln, 10, [1, 4, 16, 64], 2000, 1),
    "level sums 2000 reps depth=12": lambda: mc.level_sums(ln, 12, [2.0], 2000, 1),
}
out = {"backend": kernels.BACKEND}
for name, fn in cases.items():
    fn()  # warm-up (and JIT compilation)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    out[name] = best
print(json.dumps(out))
"""


def run(backend, repeat):
    env = dict(os.environ, MCCM_BACKEND=backend)
    res = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    nb = run("numba", args.repeat)
    npy = run("numpy", args.repeat)
    if nb.pop("backend") != "numba":
        print("numba is not importable; both columns use the numpy fallback")
    npy.pop("backend")
    width = max(len(k) for k in nb)
    print(f"{'case':<{width}}  {'numba s':>9}  {'numpy s':>9}  {'speedup':>7}")
    for name in nb:
        print(f"{name:<{width}}  {nb[name]:9.4f}  {npy[name]:9.4f}  {npy[name] / nb[name]:7.1f}")


if __name__ == "__main__":
    main()
