"""Command-line front end: ``semiconf {compile,verify,solve,trace,render,analyze}``.

JSON and CSV results go to standard output (or ``-o`` where offered);
short human-readable summaries go to standard error.  Exit status is 0 on
success, 1 on bad input and 2 when a verification fails.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import io
from .analysis import check_compactness, check_invariance, sample_semiconfiguration, verify_quasifunctional
from .compiler import compile_expr
from .core import LinkageError, Realization
from .expr import ParseError, parse
from .render import render_svg
from .solver import SolveProblem, solve, trace

log = logging.getLogger("semiconf")

EXIT_OK, EXIT_INPUT, EXIT_VERIFY = 0, 1, 2
SOLVE_RESTARTS = 200


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _fix(s: str) -> tuple[str, complex]:
    if "=" not in s:
        raise argparse.ArgumentTypeError(f"expected VERTEX=COMPLEX, got {s!r}")
    v, z = s.split("=", 1)
    try:
        return v.strip(), io.parse_complex(z)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(s: str) -> int:
    n = int(s)
    if n <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {n}")
    return n


def _positive_float(s: str) -> float:
    x = float(s)
    if not x > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {s}")
    return x


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="semiconf", description="Compile, solve and inspect planar linkages.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("compile", help="compile a polynomial expression into a linkage")
    c.add_argument("expr")
    c.add_argument("--vars", type=_positive_int, default=None)
    c.add_argument("--radius", type=_positive_float, default=1.0)
    c.add_argument("-o", "--output", required=True)

    v = sub.add_parser("verify", help="check that a gadget computes its function")
    v.add_argument("file")
    v.add_argument("--expr", default=None)
    v.add_argument("--samples", type=_positive_int, default=1000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--tol", type=_positive_float, default=1e-9)

    s = sub.add_parser("solve", help="find one realization")
    s.add_argument("file")
    s.add_argument("--fix", type=_fix, action="append", default=[], metavar="V=Z")
    s.add_argument("--seed", type=int, default=0)

    t = sub.add_parser("trace", help="drive a vertex along a path and record markers as CSV")
    t.add_argument("file")
    t.add_argument("--drive", required=True)
    t.add_argument("--path", required=True)
    t.add_argument("--steps", type=_positive_int, default=256)
    t.add_argument("--markers", default=None)
    t.add_argument("--seed", type=int, default=0)

    r = sub.add_parser("render", help="draw a realization as SVG")
    r.add_argument("file")
    r.add_argument("--realization", default=None)
    r.add_argument("-o", "--output", required=True)
    r.add_argument("--seed", type=int, default=0)

    a = sub.add_parser("analyze", help="sample the marker cloud and run invariance/compactness checks")
    a.add_argument("file")
    a.add_argument("--markers", default=None)
    a.add_argument("--samples", type=_positive_int, default=500)
    a.add_argument("--seed", type=int, default=0)
    return p


# ---------------------------------------------------------------------------


def _dump(obj) -> None:
    json.dump(obj, sys.stdout, indent=1)
    sys.stdout.write("\n")


def _markers(art: io.Artifact, s: str | None) -> list[str]:
    ms = io.parse_markers(s) if s else list(art.markers)
    missing = [m for m in ms if m not in art.linkage]
    if missing:
        raise LinkageError(f"unknown marker vertices {missing}")
    return ms


def _placement_seeder(art: io.Artifact, fixed: dict[str, complex]):
    """Initial guesses from the gadget's forward placement, honoring fixed inputs."""
    g = art.qf
    if g is None or not g.inputs:
        return None

    def seed(rng: np.random.Generator) -> dict[str, complex]:
        zs = g.domain.sample(rng, 1)
        zs = [np.array([fixed.get(v, z[0])]) for v, z in zip(g.inputs, zs)]
        bits = rng.integers(0, 2, (1, g.n_choices)).astype(np.int8)
        res = g.place(zs, bits)
        if not res.ok[0]:
            return {}
        return {v: complex(p[0]) for v, p in res.positions.items()}

    return seed


def _find(art: io.Artifact, fixed: dict[str, complex], seed: int):
    for v in fixed:
        if v not in art.linkage:
            raise LinkageError(f"cannot fix unknown vertex {v!r}")
    seeder = _placement_seeder(art, fixed)
    last = None
    for k, child in enumerate(np.random.SeedSequence(seed).spawn(SOLVE_RESTARTS)):
        if seeder is not None and k % 2 == 0:
            prob = SolveProblem(art.linkage, fixed, "seeded", seeder)
        else:
            prob = SolveProblem(art.linkage, fixed)
        last = solve(prob, child)
        if last.converged:
            return last
    return last


def cmd_compile(a) -> int:
    c = compile_expr(a.expr, a.vars, a.radius)
    io.save(c, a.output)
    print(f"compiled {a.expr!r}: {len(c.linkage.vertices)} vertices, {len(c.linkage.edges)} edges -> {a.output}",
          file=sys.stderr)
    return EXIT_OK


def cmd_verify(a) -> int:
    art = io.load(a.file)
    g = art.qf
    if g is None:
        raise LinkageError(f"{a.file} does not describe a known gadget")
    f = parse(a.expr) if a.expr else None
    rep = verify_quasifunctional(g, f, a.samples, a.seed, a.tol)
    _dump(rep.to_dict())
    print(rep.summary(), file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_VERIFY


def cmd_solve(a) -> int:
    art = io.load(a.file)
    fixed = dict(a.fix)
    r = _find(art, fixed, a.seed)
    if r is None or not r.converged:
        _dump({"status": r.status if r else "infeasible", "residual": r.residual if r else None, "seed": a.seed})
        print(f"no realization found in {SOLVE_RESTARTS} restarts", file=sys.stderr)
        return EXIT_INPUT
    _dump(io.realization_to_dict(r.realization, status=r.status, residual=r.residual, seed=a.seed,
                                 fixed={v: z for v, z in fixed.items()}))
    print(f"converged, max residual {r.residual:.3g}", file=sys.stderr)
    return EXIT_OK


def cmd_trace(a) -> int:
    art = io.load(a.file)
    markers = _markers(art, a.markers)
    path = io.parse_path(a.path)
    start = None
    r = _find(art, {a.drive: path(0.0)}, a.seed)
    if r is not None and r.converged:
        start = r.realization
    tr = trace(art.linkage, a.drive, path, markers, a.steps, start=start, seed=a.seed)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["s"] + [f"{m}.{part}" for m in markers for part in ("re", "im")])
    for s, row in zip(tr.s, tr.points):
        w.writerow([repr(float(s))] + [repr(float(x)) for z in row for x in (z.real, z.imag)])
    if not tr.complete:
        print(f"trace stopped at s={tr.s[-1]:.6g}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def cmd_render(a) -> int:
    art = io.load(a.file)
    if a.realization:
        real = io.load_realization(a.realization)
        missing = set(art.linkage.vertices) - set(real.positions)
        if missing:
            raise LinkageError(f"realization lacks vertices {sorted(missing)[:5]}")
    else:
        r = _find(art, {}, a.seed)
        if r is None or not r.converged:
            raise LinkageError("no realization found to render")
        real = r.realization
    Path(a.output).write_text(render_svg(art.linkage, real, art.markers))
    print(f"wrote {a.output}", file=sys.stderr)
    return EXIT_OK


def cmd_analyze(a) -> int:
    art = io.load(a.file)
    markers = _markers(art, a.markers)
    lk = art.linkage
    seeder = _placement_seeder(art, {})
    cloud = sample_semiconfiguration(lk, markers, a.samples, a.seed, init=seeder, dedup=None)
    inv = check_invariance(lk, seed=a.seed, realizations=cloud.realizations[:50])
    comp = check_compactness(lk, cloud)
    pts = cloud.points
    out = {
        "markers": markers,
        "cloud": {
            "points": len(cloud), "restarts": cloud.restarts, "stats": cloud.stats, "seed": a.seed,
            "valid": cloud.validate(lk),
            "bbox": [[float(pts[:, j].real.min()), float(pts[:, j].imag.min()),
                      float(pts[:, j].real.max()), float(pts[:, j].imag.max())] for j in range(len(markers))]
            if len(pts) else [],
        },
        "invariance": inv.to_dict(),
        "compactness": comp.to_dict(),
    }
    _dump(out)
    print(f"{len(cloud)} points; invariance ({inv.group}) {'ok' if inv.passed else 'FAIL'}; "
          f"compactness {'ok' if comp.passed else comp.message}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "compile": cmd_compile, "verify": cmd_verify, "solve": cmd_solve,
    "trace": cmd_trace, "render": cmd_render, "analyze": cmd_analyze,
}


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    a = build_parser().parse_args(argv)
    try:
        return COMMANDS[a.command](a)
    except (LinkageError, ParseError, ValueError, OSError) as exc:
        print(f"semiconf {a.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
