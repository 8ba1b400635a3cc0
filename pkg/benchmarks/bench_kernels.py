"""Time the compiled and pure-Python kernels on the same inputs.

    python benchmarks/bench_kernels.py [--sizes 100,200,400,800] [--repeat 5]

Prints per-call times for ``curve_tables`` and ``implicit_solve`` (m = 1, 2),
the speed-up and the largest difference between the two backends' results.
A full adaptive run of the perturbed-arc problem is timed as well.
"""

import argparse
import math
import os
import subprocess
import sys
import timeit

import numpy as np

from conediff.geometry import Cone, extended_nodes
from conediff.initgen import PerturbationSpec, perturbed_arc
from conediff.kernels import available_backends

RUN_SNIPPET = """
import time
from conediff.config import parse_config
from conediff.flow import run
cfg = parse_config('''
cone.theta1 = 1.5707963267948966
cone.theta2 = 0
init.type = perturbed
init.radius = 1
init.modes = 1:0.05
flow.m = {m}
flow.N = 200
''')
t0 = time.perf_counter()
r = run(cfg)
print(time.perf_counter() - t0, r.n_steps)
"""


def per_call(fn, repeat):
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number


def bench_kernels(sizes, repeat):
    backends = available_backends()
    if "cython" not in backends:
        print("compiled extension not built; only the Python kernels are available")
    cone = Cone(math.pi / 2, 0.0)
    print(f"{'kernel':<22s} {'N':>5s} " + " ".join(f"{b:>12s}" for b in backends) + f" {'speed-up':>9s} {'max diff':>10s}")
    for n in sizes:
        curve = perturbed_arc(PerturbationSpec(cone, ((1, 0.05), (3, 0.02)), radius=1.0), n)
        ext = extended_nodes(curve.nodes, cone)
        args = (curve.nodes, curve.h_ext, curve.g, curve.nu, curve.k, cone.reflection(1), cone.reflection(2))
        cases = [("curve_tables", lambda mod: mod.curve_tables(ext))]
        for m, dt in ((1, 1e-4), (2, 1e-5)):
            cases.append((f"implicit_solve m={m}", lambda mod, m=m, dt=dt: mod.implicit_solve(*args, m, dt)))
        for name, call in cases:
            times = {b: per_call(lambda mod=mod: call(mod), repeat) for b, mod in backends.items()}
            outs = {b: call(mod) for b, mod in backends.items()}
            if len(outs) == 2:
                a, c = outs.values()
                a = a if isinstance(a, tuple) else (a,)
                c = c if isinstance(c, tuple) else (c,)
                diff = max(float(np.max(np.abs(x - y))) for x, y in zip(a, c))
                speed = times["python"] / times["cython"]
                tail = f" {speed:>8.1f}x {diff:>10.2e}"
            else:
                tail = f" {'-':>9s} {'-':>10s}"
            cols = " ".join(f"{1e3 * times[b]:>10.3f}ms" for b in backends)
            print(f"{name:<22s} {n:>5d} {cols}{tail}")


def bench_runs():
    print("\nfull adaptive run, perturbed arc, N = 200")
    for m in (1, 2):
        for label, env in (("compiled", {}), ("python", {"CONEDIFF_PURE": "1"})):
            proc = subprocess.run(
                [sys.executable, "-c", RUN_SNIPPET.format(m=m)],
                env={**os.environ, **env}, capture_output=True, text=True, check=True,
            )
            secs, steps = proc.stdout.split()
            print(f"  m={m} {label:<9s} {float(secs):7.2f}s  ({steps} steps)")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--sizes", default="100,200,400,800")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--no-runs", action="store_true", help="skip the full-run timing")
    args = ap.parse_args()
    bench_kernels([int(s) for s in args.sizes.split(",")], args.repeat)
    if not args.no_runs:
        bench_runs()


if __name__ == "__main__":
    main()
