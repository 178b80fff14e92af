"""Lower expressions to quasifunctional linkages by gadget composition.

Every intermediate value lives on a vertex.  Gadget parameters are sized from
magnitude bounds so that each gadget's input stays within half of its
certified domain (a factor-2 margin), which :func:`check_margins` re-derives
from the instantiation log without sampling.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import Linkage, LinkageError, MarkerSet, pin
from .expr import (
    Add,
    Conj,
    Const,
    Expr,
    Mul,
    Scale,
    Square,
    Sub,
    Var,
    evaluate,
    magnitude_bounds,
    n_vars as expr_n_vars,
    parse,
    postorder,
    simplify,
    sum_exprs,
)
from .gadgets import conjugation, identity_gadget, pantograph, squaring
from .qf import Circuit, Polydisk, QFLinkage

log = logging.getLogger(__name__)

MARGIN = 2.0


@dataclass
class CompiledQF:
    qf: QFLinkage
    expr: Expr
    n_vars: int
    radius: float
    node_vertex: dict[Expr, str]
    log: list[dict]

    @property
    def linkage(self) -> Linkage:
        return self.qf.linkage

    @property
    def inputs(self) -> tuple[str, ...]:
        return self.qf.inputs

    @property
    def output(self) -> str:
        return self.qf.outputs[0]


class _Lowering:
    def __init__(self, n: int, radius: float):
        self.radius = radius
        self.names = [f"z{i + 1}" for i in range(n)]
        self.circ = Circuit(self.names)
        self.count = 0
        # smallest size used for a gadget, so zero bounds never give zero lengths
        self.floor = 1e-3 * radius

    def _prefix(self, kind: str) -> str:
        self.count += 1
        return f"g{self.count}.{kind}"

    def _add(self, g, args, kind, need, capacity, extra=None):
        note = {"need": need, "capacity": capacity, "args": list(args)}
        if extra:
            note.update(extra)
        (out,) = self.circ.add(g, args, self._prefix(kind), note)
        self.circ.log[-1]["output"] = out
        return out

    # each primitive returns the vertex holding its result

    def average(self, x, bx, y, by):
        need = bx + by  # bound on |x - y|
        a = max(need, self.floor) / 2  # domain |x - y| <= 4a = 2*need
        return self._add(pantograph("average", a), [x, y], "avg", need, 4 * a)

    def scale_up(self, x, bx, c):
        a = max(bx, self.floor)
        return self._add(pantograph("scale_up", a, c), [x], "up", bx, 2 * a)

    def scale_down(self, x, bx, c):
        a = max(bx, self.floor) / (1 + c)
        return self._add(pantograph("scale_down", a, c), [x], "down", bx, 2 * (1 + c) * a)

    def negate(self, x, bx, c=1.0):
        a = max(bx, self.floor)
        return self._add(pantograph("negate", a, c), [x], "neg", bx, 2 * a)

    def identity(self, x, bx):
        return self._add(identity_gadget(), [x], "id", bx, math.inf)

    def square(self, x, bx):
        r = MARGIN * max(bx, self.floor)
        return self._add(squaring(r), [x], "sq", bx, r)

    def conj(self, x, bx):
        r = MARGIN * max(bx, self.floor)
        return self._add(conjugation(r), [x], "conj", bx, r)

    def add(self, x, bx, y, by):
        if x == y:
            return self.scale_up(x, bx, 1.0)
        return self.scale_up(self.average(x, bx, y, by), (bx + by) / 2, 1.0)

    def sub(self, x, bx, y, by):
        if x == y:
            return self.circ.constant(0)
        return self.add(x, bx, self.negate(y, by), by)

    def scale(self, x, bx, lam):
        if lam == 0:
            return self.circ.constant(0)
        if lam == 1:
            return self.identity(x, bx)
        if lam > 1:
            return self.scale_up(x, bx, lam - 1)
        if lam > 0:
            return self.scale_down(x, bx, 1 / lam - 1)
        return self.negate(x, bx, -lam)

    def mul(self, x, bx, y, by):
        # xy = ((x+y)/2)^2 - ((x-y)/2)^2
        if x == y:
            return self.square(x, bx)
        s = self.average(x, bx, y, by)
        d = self.average(x, bx, self.negate(y, by), by)
        h = (bx + by) / 2
        return self.sub(self.square(s, h), h * h, self.square(d, h), h * h)


def compile_expr(e: Expr | str, n_vars: int | None = None, radius: float = 1.0,
                 simplify_first: bool = True) -> CompiledQF:
    """Compile ``e`` into a linkage computing it on the polydisk ``|z_i| <= radius``.

    Inputs are the vertices ``z1..zn`` and the output is ``out``.
    """
    if isinstance(e, str):
        e = parse(e)
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    src = e
    if simplify_first:
        e = simplify(e)
    k = expr_n_vars(src)
    n = k if n_vars is None else n_vars
    if n < k:
        raise ValueError(f"expression uses {k} variables but n_vars={n}")
    bounds = magnitude_bounds(e, [radius] * n)
    lw = _Lowering(n, radius)
    vtx: dict[Expr, str] = {}
    for nd in postorder(e):
        b = lambda c: bounds[c]  # noqa: E731
        if isinstance(nd, Var):
            v = lw.names[nd.index]
        elif isinstance(nd, Const):
            v = lw.circ.constant(nd.value)
        elif isinstance(nd, Add):
            v = lw.add(vtx[nd.a], b(nd.a), vtx[nd.b], b(nd.b))
        elif isinstance(nd, Sub):
            v = lw.sub(vtx[nd.a], b(nd.a), vtx[nd.b], b(nd.b))
        elif isinstance(nd, Mul):
            v = lw.mul(vtx[nd.a], b(nd.a), vtx[nd.b], b(nd.b))
        elif isinstance(nd, Scale):
            v = lw.scale(vtx[nd.a], b(nd.a), nd.lam)
        elif isinstance(nd, Square):
            v = lw.square(vtx[nd.a], b(nd.a))
        elif isinstance(nd, Conj):
            v = lw.conj(vtx[nd.a], b(nd.a))
        else:
            raise TypeError(f"unknown node {nd!r}")
        vtx[nd] = v
    out = vtx[e]
    if out in lw.names:
        # output would coincide with an input
        out = lw.identity(out, bounds[e])
    f = lambda zs: [evaluate(src, zs)]  # noqa: E731
    qf = lw.circ.build([out], Polydisk(radius, n), "compiled",
                       {"expr": _expr_text(src), "n_vars": n, "radius": radius}, f, rename={out: "out"})
    node_vertex = {nd: ("out" if v == out else v) for nd, v in vtx.items()}
    return CompiledQF(qf, src, n, radius, node_vertex, lw.circ.log)


def _expr_text(e: Expr) -> str:
    from .expr import to_string

    return to_string(e)


def check_margins(c: CompiledQF, margin: float = MARGIN) -> list[str]:
    """Static check of the instantiation log: every gadget input bound is at
    most ``1/margin`` of the gadget's certified capacity.  Returns problems."""
    problems = []
    for entry in c.log:
        need, cap = entry["need"], entry["capacity"]
        if need * margin > cap * (1 + 1e-12):
            problems.append(f"{entry['gadget']}: bound {need:g} exceeds capacity {cap:g}/{margin:g}")
    return problems


# ---------------------------------------------------------------------------
# Semialgebraic sets


@dataclass
class AlgebraicLift:
    """``P`` over ``N + M`` real variables whose zero set projects onto a basic
    semialgebraic set in the first ``N`` coordinates."""

    P: Expr
    n_original: int
    n_total: int
    slack_eq: list[int] = field(default_factory=list)
    slack_pos: list[int] = field(default_factory=list)

    @property
    def projection(self) -> tuple[int, ...]:
        return tuple(range(self.n_original))

    def project(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points)[..., : self.n_original]


def basic_semialgebraic_to_algebraic(p: Sequence[Expr], q: Sequence[Expr], r: Sequence[Expr],
                                     n: int) -> AlgebraicLift:
    """Slack-variable encoding of ``{p_i = 0, q_j >= 0, r_k > 0}`` in ``R^n``.

    ``P = sum p_i^2 + sum (y_j^2 - q_j)^2 + sum (w_k^2 r_k - 1)^2`` with new
    variables ``y_j`` (indices ``n..``) and ``w_k`` after them.
    """
    terms: list[Expr] = [Square(pi) for pi in p]
    slack_eq, slack_pos = [], []
    idx = n
    for qj in q:
        y = Var(idx)
        slack_eq.append(idx)
        idx += 1
        terms.append(Square(Sub(Square(y), qj)))
    for rk in r:
        w = Var(idx)
        slack_pos.append(idx)
        idx += 1
        terms.append(Square(Sub(Mul(Square(w), rk), Const(1))))
    return AlgebraicLift(sum_exprs(terms), n, idx, slack_eq, slack_pos)


def realify(P: Expr, n: int) -> Expr:
    """Nonnegative real expression vanishing exactly where ``P = 0`` and all
    ``n`` variables are real: ``|P|^2 + sum (Im z_i)^2``."""
    terms = [Mul(P, Conj(P))]
    for i in range(n):
        z = Var(i)
        # (Im z)^2 = -(z - conj z)^2 / 4
        terms.append(Scale(-0.25, Square(Sub(z, Conj(z)))))
    return sum_exprs(terms)


class ZeroSetLinkage:
    """Compiled ``P`` with its output pinned at 0; iterates as ``(linkage, markers)``."""

    def __init__(self, compiled: CompiledQF, linkage: Linkage, markers: MarkerSet):
        self.compiled = compiled
        self.linkage = linkage
        self.markers = markers

    def __iter__(self):
        return iter((self.linkage, self.markers))

    def project(self, z0: Sequence[complex], max_iter: int = 50, tol: float = 1e-13) -> np.ndarray | None:
        """Gauss-Newton (minimum-norm steps) from ``z0`` onto ``P = 0`` in input space.

        Returns ``None`` when it does not converge or leaves the domain.
        """
        e = self.compiled.expr
        n = self.compiled.n_vars
        x = np.concatenate([np.real(z0), np.imag(z0)]).astype(float)

        def F(x):
            v = complex(evaluate(e, [np.array([x[i] + 1j * x[n + i]]) for i in range(n)])[0])
            return np.array([v.real, v.imag])

        h = 1e-7 * max(1.0, self.compiled.radius)
        for _ in range(max_iter):
            f = F(x)
            if np.abs(f).max() < tol:
                z = x[:n] + 1j * x[n:]
                return z if np.abs(z).max() <= self.compiled.radius else None
            J = np.empty((2, 2 * n))
            for j in range(2 * n):
                d = np.zeros(2 * n)
                d[j] = h
                J[:, j] = (F(x + d) - F(x - d)) / (2 * h)
            x = x - np.linalg.lstsq(J, f, rcond=1e-12)[0]
        return None

    def seeder(self, rng: np.random.Generator) -> dict[str, complex]:
        """Initial guess for a zero-set realization.

        A random domain point is first pushed onto ``P = 0`` (:meth:`project`);
        the gadgets are then forward-placed there on a random branch.  If the
        projection fails the unprojected point is used, leaving the solver to
        move the inputs itself.
        """
        g = self.compiled.qf
        zs = g.domain.sample(rng, 1)
        p = self.project([z[0] for z in zs])
        if p is not None:
            zs = [np.array([w]) for w in p]
        bits = rng.integers(0, 2, (1, g.n_choices)).astype(np.int8)
        res = g.place(zs, bits)
        return {v: complex(q[0]) for v, q in res.positions.items()}


def linkage_for_zero_set(P: Expr | str, radius: float, n_vars: int | None = None,
                         markers: Sequence[str] | None = None) -> ZeroSetLinkage:
    """Linkage whose marker cloud is ``P^{-1}(0)`` within the polydisk of ``radius``."""
    c = compile_expr(P, n_vars, radius)
    if c.output in c.linkage.pinned:
        raise LinkageError("constant expression: output is already pinned")
    lk = pin(c.linkage, c.output, 0j)
    W = MarkerSet(tuple(markers) if markers else c.inputs).check(lk)
    return ZeroSetLinkage(c, lk, W)


compile = compile_expr  # noqa: A001

__all__ = [
    "AlgebraicLift", "CompiledQF", "ZeroSetLinkage", "basic_semialgebraic_to_algebraic", "check_margins",
    "compile", "compile_expr", "linkage_for_zero_set", "realify",
]
