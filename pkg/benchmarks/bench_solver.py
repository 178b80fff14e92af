"""Compare the compiled and numpy solver kernels on the same restarts.

    python benchmarks/bench_solver.py [--restarts N] [--json out.json]

Both backends run identical seeded solves; the script reports wall time per
solve, the speedup and whether converged counts agree.
"""
from __future__ import annotations

import argparse
import json
import time

import numpy as np

from semiconf import solver
from semiconf.compiler import compile_expr
from semiconf.core import LinkageBuilder
from semiconf.gadgets import peaucellier, squaring


def four_bar():
    b = LinkageBuilder()
    b.add_vertex("A", 0j)
    b.add_vertex("D", 1 + 0j)
    b.add_edge("A", "B", 0.3)
    b.add_edge("D", "C", 0.6)
    b.add_edge("B", "C", 0.9)
    return b.build()


def cases():
    sq = squaring(1.0)

    def seeded(g, sigma):
        def f(rng):
            zs = g.domain.sample(rng, 1)
            bits = rng.integers(0, 2, (1, g.n_choices)).astype(np.int8)
            res = g.place(zs, bits)
            return {v: complex(p[0]) + sigma * complex(*rng.normal(size=2)) for v, p in res.positions.items()}
        return f

    zw = compile_expr("z*w")
    return [
        ("four-bar", four_bar(), None),
        ("peaucellier(5,4,3)", peaucellier(5, 4, 3).linkage, None),
        ("squaring(1), seeded", sq.linkage, seeded(sq, 0.3)),
        ("compiled z*w, seeded", zw.linkage, seeded(zw.qf, 0.1)),
    ]


def run(linkage, init, n, backend):
    solver.set_backend(backend)
    stats = {}
    t = time.perf_counter()
    solver.sample_configurations(linkage, n, 0, init=init, dedup=None, stats=stats)
    return time.perf_counter() - t, stats["converged"]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--restarts", type=int, default=200)
    ap.add_argument("--json", default=None)
    a = ap.parse_args(argv)
    if "cython" not in solver.available_backends():
        print("compiled kernel not built; only the numpy backend is available")
        return 1
    rows = []
    print(f"{'case':26s} {'vertices':>8s} {'cython ms':>10s} {'python ms':>10s} {'speedup':>8s}  converged")
    for name, lk, init in cases():
        tc, nc = run(lk, init, a.restarts, "cython")
        tp, np_ = run(lk, init, a.restarts, "python")
        row = {"case": name, "vertices": len(lk.vertices), "restarts": a.restarts,
               "cython_ms": 1e3 * tc / a.restarts, "python_ms": 1e3 * tp / a.restarts,
               "speedup": tp / tc, "converged_cython": nc, "converged_python": np_}
        rows.append(row)
        print(f"{name:26s} {len(lk.vertices):8d} {row['cython_ms']:10.3f} {row['python_ms']:10.3f} "
              f"{row['speedup']:8.1f}  {nc}/{np_}")
    solver.set_backend("cython")
    if a.json:
        with open(a.json, "w") as fh:
            json.dump(rows, fh, indent=1)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
