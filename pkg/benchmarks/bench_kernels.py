"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints per-call timings for the simplex least-squares solve, the inner fit
used by the V search, the exhaustive HHI bound, and one full synthetic
control fit run with each backend in a subprocess.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from cbscm import _pykernels

try:
    from cbscm import _kernels
except ImportError:  # extension not built
    _kernels = None

FULL_FIT = """
import time
from cbscm import simgen, _backend
from cbscm.scm import ScmConfig, fit_scm
panel, _ = simgen.generate_panel_scenario(simgen.default_scenario(seed=1))
t = time.perf_counter()
fit_scm(panel, ScmConfig("ENG", 1981))
print(_backend.BACKEND, time.perf_counter() - t)
"""


def _instances(n, K=12, I=5, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        X0 = rng.normal(size=(K, I))
        X1 = X0 @ rng.dirichlet(np.ones(I)) + 0.3 * rng.normal(size=K)
        v = rng.dirichlet(np.ones(K))
        Y0 = rng.normal(size=(18, I))
        y1 = rng.normal(size=18)
        out.append((v, X1, X0, y1, Y0))
    return out


def _time(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n", type=int, default=200, help="QP instances per timing")
    args = ap.parse_args(argv)

    backends = [("python", _pykernels)] + ([("cython", _kernels)] if _kernels else [])
    inst = _instances(args.n)
    rows = []
    for name, mod in backends:
        def qp():
            for v, X1, X0, _, _ in inst:
                sv = np.sqrt(v)
                mod.simplex_ls(sv[:, None] * X0, sv * X1)

        def fit():
            for v, X1, X0, y1, Y0 in inst:
                mod.weighted_fit(v, X1, X0, y1, Y0)

        t_qp = _time(qp, args.repeat) / args.n
        t_fit = _time(fit, args.repeat) / args.n
        t_hhi = _time(lambda: mod.hhi_max_enumerate(4, 3, 1, 0), 1)
        rows.append((name, t_qp, t_fit, t_hhi))

    print(f"{'backend':8s} {'simplex_ls':>12s} {'weighted_fit':>13s} {'hhi_max K=4':>12s}")
    for name, a, b, c in rows:
        print(f"{name:8s} {a * 1e6:10.1f}us {b * 1e6:11.1f}us {c:11.3f}s")
    if len(rows) == 2:
        print(f"speedup  {rows[0][1] / rows[1][1]:11.1f}x {rows[0][2] / rows[1][2]:12.1f}x {rows[0][3] / rows[1][3]:11.1f}x")

    print("\nfull fit (6 leagues x 31 seasons, default search):")
    for name, _ in backends:
        env = dict(os.environ, CBSCM_BACKEND=name)
        res = subprocess.run([sys.executable, "-c", FULL_FIT], env=env, capture_output=True, text=True, check=True)
        label, secs = res.stdout.split()
        print(f"  {label:8s} {float(secs):7.2f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
