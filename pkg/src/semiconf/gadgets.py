"""Gadget constructions: identity, interior joints, cables, pantographs,
the Peaucellier inversor, squaring, straight-line and conjugation linkages.

Every quasifunctional gadget comes with an exact forward placement.  The
internal layouts are reconstructed from the geometric constraints each
gadget must satisfy; they are certified behaviourally by the tests.
"""
from __future__ import annotations

import math
from enum import Enum

import numpy as np

from .core import (
    EuclideanMotion,
    Linkage,
    LinkageBuilder,
    LinkageError,
    VertexId,
)
from .qf import (
    Annulus,
    Circuit,
    Disk,
    PairDistance,
    Plane,
    Polydisk,
    PrimitivePlacement,
    QFLinkage,
    Segment,
)

# relative slack for sqrt arguments that should be >= 0 in exact arithmetic
_SQRT_SLACK = 1e-9


def _unit(z: np.ndarray, fallback: complex = 1.0) -> np.ndarray:
    a = np.abs(z)
    return np.where(a > 0, z / np.where(a > 0, a, 1.0), fallback)


def _safe_sqrt(q: np.ndarray, scale: float) -> tuple[np.ndarray, np.ndarray]:
    ok = q >= -_SQRT_SLACK * scale
    return np.sqrt(np.maximum(q, 0.0)), ok


def _sign(choices: np.ndarray, j: int) -> np.ndarray:
    return 1.0 - 2.0 * choices[:, j]


# ---------------------------------------------------------------------------
# Linkage-level constructions


def midpoint_joint(linkage: Linkage, u: VertexId, v: VertexId, at: float = 0.5,
                   name: VertexId | None = None) -> tuple[Linkage, VertexId]:
    """Put a joint on bar ``u-v`` at fraction ``at`` from ``u``.

    The joint gets bars of lengths ``at*l`` and ``(1-at)*l``; since they sum
    to ``l`` the triangle is degenerate in every realization and the joint
    sits on the segment.
    """
    if not 0.0 < at < 1.0:
        raise LinkageError(f"joint fraction must lie in (0, 1), got {at}")
    b = LinkageBuilder(linkage)
    name = name or f"{u}~{v}@{at:g}"
    if name in b.vertices:
        raise LinkageError(f"vertex {name!r} already exists")
    b.joint(u, v, at, name)
    return b.build(), name


def telescope(linkage: Linkage, u: VertexId, v: VertexId, a: float, b: float,
              name: VertexId | None = None) -> Linkage:
    """Constrain ``a <= |u - v| <= b`` with a two-bar chain through a hidden vertex."""
    if not 0 < a < b:
        raise LinkageError(f"telescope needs 0 < a < b, got a={a}, b={b}")
    return _chain(linkage, u, v, (a + b) / 2, (b - a) / 2, name)


def cable(linkage: Linkage, u: VertexId, v: VertexId, b: float, name: VertexId | None = None) -> Linkage:
    """Constrain ``|u - v| <= b``."""
    if not b > 0:
        raise LinkageError(f"cable bound must be positive, got {b}")
    return _chain(linkage, u, v, b / 2, b / 2, name)


def _chain(linkage, u, v, c, d, name):
    bld = LinkageBuilder(linkage)
    for w in (u, v):
        if w not in bld.vertices:
            raise LinkageError(f"no vertex {w!r}")
    name = name or f"{u}~{v}#cable"
    if name in bld.vertices:
        raise LinkageError(f"vertex {name!r} already exists")
    bld.chain(u, v, c, d, name)
    return bld.build()


def chain_point(u: np.ndarray, v: np.ndarray, c: float, d: float, sign) -> tuple[np.ndarray, np.ndarray]:
    """Position of the hidden vertex of a two-bar chain (two-circle intersection)."""
    w = v - u
    L = np.abs(w)
    e = _unit(w)
    Ls = np.where(L > 0, L, 1.0)
    x = np.where(L > 0, (Ls**2 + c**2 - d**2) / (2 * Ls), c)
    y, ok = _safe_sqrt(c**2 - x**2, c**2)
    ok &= (L <= c + d + _SQRT_SLACK * (c + d)) & (L >= abs(c - d) - _SQRT_SLACK * (c + d))
    return u + e * (x + 1j * sign * y), ok


def rigidified_parallelogram(side1: float, side2: float, brace: bool = True) -> Linkage:
    """Four-bar ``P0-P1-P2-P3`` with ``|P0P1| = |P2P3| = side1`` and a brace.

    The brace joins the midpoints of the two ``side1`` bars and has length
    ``side2``; it excludes the folded (anti-parallelogram) realizations.
    """
    if not (side1 > 0 and side2 > 0):
        raise LinkageError("parallelogram sides must be positive")
    b = LinkageBuilder()
    b.add_edge("P0", "P1", side1)
    b.add_edge("P1", "P2", side2)
    b.add_edge("P2", "P3", side1)
    b.add_edge("P3", "P0", side2)
    if brace:
        b.joint("P0", "P1", 0.5, "M01")
        b.joint("P3", "P2", 0.5, "M32")
        b.add_edge("M01", "M32", side2, kind="brace")
    return b.build()


# ---------------------------------------------------------------------------
# Identity (equilateral triangle with two spokes to its center)


def identity_gadget(side: float = 1.0) -> QFLinkage:
    """Input ``D`` and output ``E`` both forced to the center of triangle ``ABC``."""
    spoke = side / math.sqrt(3.0)
    b = LinkageBuilder()
    for u, v in (("A", "B"), ("B", "C"), ("C", "A")):
        b.add_edge(u, v, side)
    for hub in ("D", "E"):
        for v in ("A", "B", "C"):
            b.add_edge(v, hub, spoke)
    lk = b.build()

    def place(inputs, choices):
        z = inputs[0]
        w = np.exp(2j * np.pi / 3 * _sign(choices, 0))
        pos = {"D": z, "E": z.copy(), "A": z + spoke, "B": z + spoke * w, "C": z + spoke * w * w}
        return pos, np.ones(len(z), dtype=bool)

    dom = Plane(10.0 * side)
    return QFLinkage(lk, ("D",), ("E",), dom, PrimitivePlacement(place, 1, dom), "identity",
                     {"side": side, "spoke": spoke}, lambda zs: [zs[0]])


# ---------------------------------------------------------------------------
# Pantograph


class PantographMode(str, Enum):
    AVERAGE = "average"
    SCALE_UP = "scale_up"
    SCALE_DOWN = "scale_down"
    NEGATE = "negate"


def pantograph(mode: PantographMode | str, a: float, c: float = 1.0, pivot: complex = 0j) -> QFLinkage:
    """Rigidified parallelogram ``DEBF`` with sides ``DE`` and ``DF`` extended.

    Three distinguished vertices stay collinear with ``C = (1+c) B - c A``.
    With ``L = a`` the bars are ``|DE| = |FB| = cL``, ``|DF| = |EB| = L``,
    ``E`` a joint on ``DA`` (``|DA| = (1+c)L``) and ``F`` a joint on ``DC``
    (``|DC| = (1+c)L``).  Then ``B - A`` ranges over the full disk of radius
    ``2L``.

    Modes (``pivot`` is where the pinned vertex sits, 0 by default):

    ``average``     inputs A, C; output B = (cA + C)/(1+c)  (c=1: midpoint)
    ``scale_up``    A pinned; input B, output C = (1+c)B - c*pivot
    ``scale_down``  A pinned; input C, output B = (C + c*pivot)/(1+c)
    ``negate``      B pinned; input A, output C = (1+c)*pivot - cA
    """
    mode = PantographMode(mode)
    if not (a > 0 and c > 0):
        raise LinkageError(f"pantograph needs a > 0 and c > 0, got a={a}, c={c}")
    L = float(a)
    pivot = complex(pivot)
    b = LinkageBuilder()
    b.add_edge("D", "A", (1 + c) * L)
    b.joint("D", "A", c / (1 + c), "E")
    b.add_edge("D", "C", (1 + c) * L)
    b.joint("D", "C", 1 / (1 + c), "F")
    b.add_edge("E", "B", L)
    b.add_edge("F", "B", c * L)
    b.joint("D", "E", 0.5, "P")
    b.joint("F", "B", 0.5, "Q")
    b.add_edge("P", "Q", L, kind="brace")

    def core(A, B, C, choices):
        v = B - A
        q = L**2 - np.abs(v) ** 2 / 4
        root, ok = _safe_sqrt(q, L**2)
        w = 1j * _unit(v) * root * _sign(choices, 0)
        D = A + (1 + c) * (v / 2 - w)
        E = D - c * (v / 2 - w)
        F = D + v / 2 + w
        pos = {"A": A, "B": B, "C": C, "D": D, "E": E, "F": F, "P": (D + E) / 2, "Q": (F + B) / 2}
        return pos, ok

    if mode is PantographMode.AVERAGE:
        inputs, outputs = ("A", "C"), ("B",)
        dom = PairDistance(2 * (1 + c) * L, 2 * L)
        f = lambda zs: [(c * zs[0] + zs[1]) / (1 + c)]  # noqa: E731

        def place(zs, ch):
            A, C = zs
            return core(A, (c * A + C) / (1 + c), C, ch)

    elif mode is PantographMode.SCALE_UP:
        b.pin("A", pivot)
        inputs, outputs = ("B",), ("C",)
        dom = Disk(2 * L, pivot)
        f = lambda zs: [(1 + c) * zs[0] - c * pivot]  # noqa: E731

        def place(zs, ch):
            B = zs[0]
            A = np.full_like(B, pivot)
            return core(A, B, (1 + c) * B - c * A, ch)

    elif mode is PantographMode.SCALE_DOWN:
        b.pin("A", pivot)
        inputs, outputs = ("C",), ("B",)
        dom = Disk(2 * (1 + c) * L, pivot)
        f = lambda zs: [(zs[0] + c * pivot) / (1 + c)]  # noqa: E731

        def place(zs, ch):
            C = zs[0]
            A = np.full_like(C, pivot)
            return core(A, (c * A + C) / (1 + c), C, ch)

    else:
        b.pin("B", pivot)
        inputs, outputs = ("A",), ("C",)
        dom = Disk(2 * L, pivot)
        f = lambda zs: [(1 + c) * pivot - c * zs[0]]  # noqa: E731

        def place(zs, ch):
            A = zs[0]
            B = np.full_like(A, pivot)
            return core(A, B, (1 + c) * B - c * A, ch)

    params = {"mode": mode.value, "a": L, "c": c, "pivot": [pivot.real, pivot.imag]}
    return QFLinkage(b.build(), inputs, outputs, dom, PrimitivePlacement(place, 1, dom),
                     f"pantograph-{mode.value}", params, f)


# ---------------------------------------------------------------------------
# Peaucellier inversor


def peaucellier_annulus(a: float, b: float, c: float) -> tuple[float, float]:
    t2 = a * a - b * b
    root = math.sqrt(t2 + c * c)
    return root - c, root + c


def peaucellier(a: float, b: float, c: float, pivot: complex = 0j) -> QFLinkage:
    """Inversion ``z -> t^2 z / |z|^2`` in the circle of radius ``t = sqrt(a^2 - b^2)``.

    ``A`` is pinned at ``pivot``; ``|AB| = |AC| = a`` and ``B D C E`` is a
    rhombus of side ``b``.  The rhombus is braced between the midpoints
    ``P`` of ``BD`` and ``Q`` of ``CE``; the midpoint ``M`` of that brace is
    the center of the rhombus, and a cable of bound ``c`` from ``D`` to
    ``M`` keeps ``B`` and ``C`` apart.  Input ``D``, output ``E``; the domain
    is the annulus ``sqrt(t^2 + c^2) -+ c`` around the pivot.
    """
    if not 0 < c < b < a:
        raise LinkageError(f"Peaucellier inversor needs 0 < c < b < a, got a={a}, b={b}, c={c}")
    pivot = complex(pivot)
    t2 = a * a - b * b
    r_in, r_out = peaucellier_annulus(a, b, c)
    bl = LinkageBuilder()
    bl.add_vertex("A", pin=pivot)
    for u in ("B", "C"):
        bl.add_edge("A", u, a)
        bl.add_edge("D", u, b)
        bl.add_edge("E", u, b)
    bl.joint("B", "D", 0.5, "P")
    bl.joint("C", "E", 0.5, "Q")
    bl.add_edge("P", "Q", b, kind="brace")
    bl.joint("P", "Q", 0.5, "M")
    bl.chain("D", "M", c / 2, c / 2, "X")

    def place(zs, ch):
        D = zs[0]
        rel = D - pivot
        rho = np.abs(rel)
        ok = rho > 0
        rho_s = np.where(ok, rho, 1.0)
        u = _unit(rel)
        h = np.abs(rho_s**2 - t2) / (2 * rho_s)
        ok &= h <= c * (1 + _SQRT_SLACK)
        h = np.minimum(h, c)
        m = (rho_s**2 + t2) / (2 * rho_s)
        s, ok_s = _safe_sqrt(b * b - h * h, b * b)
        M = pivot + m * u
        E = pivot + (t2 / rho_s) * u
        side = 1j * u * s * _sign(ch, 0)
        B, C = M + side, M - side
        X, ok_x = chain_point(D, M, c / 2, c / 2, _sign(ch, 1))
        pos = {"A": np.full_like(D, pivot), "B": B, "C": C, "D": D, "E": E,
               "P": (B + D) / 2, "Q": (C + E) / 2, "M": M, "X": X}
        return pos, ok & ok_s & ok_x

    dom = Annulus(r_in, r_out, pivot)

    def f(zs):
        rel = zs[0] - pivot
        return [pivot + t2 * rel / np.abs(rel) ** 2]

    return QFLinkage(bl.build(), ("D",), ("E",), dom, PrimitivePlacement(place, 2, dom), "peaucellier",
                     {"a": a, "b": b, "c": c, "t": math.sqrt(t2), "pivot": [pivot.real, pivot.imag]}, f)


# ---------------------------------------------------------------------------
# Squaring


def squaring(r: float) -> QFLinkage:
    """``z -> z^2`` on ``|z| <= r`` via ``z^2 = t^2 - t h((h(t+z) + h(t-z))/2)``.

    ``h`` is the inversor with ``t = 4r`` and cable bound ``3r``, whose
    domain is the annulus ``2r <= |z| <= 8r``.  The affine steps use
    pantographs with pinned pivots.
    """
    if not r > 0:
        raise LinkageError(f"squaring radius must be positive, got {r}")
    t = 4.0 * r
    cc, bb = 3.0 * r, 5.0 * r
    aa = math.hypot(t, bb)
    post_pivot = t * t / (1 + t)
    circ = Circuit(["z"])
    (neg,) = circ.add(pantograph("negate", r), ["z"], "neg")
    (plus,) = circ.add(pantograph("negate", 3 * r, pivot=t / 2), [neg], "plus")
    (minus,) = circ.add(pantograph("negate", 3 * r, pivot=t / 2), ["z"], "minus")
    (h1,) = circ.add(peaucellier(aa, bb, cc), [plus], "inv1")
    (h2,) = circ.add(peaucellier(aa, bb, cc), [minus], "inv2")
    (avg,) = circ.add(pantograph("average", 2 * r), [h1, h2], "avg")
    (w,) = circ.add(peaucellier(aa, bb, cc), [avg], "inv3")
    (out,) = circ.add(pantograph("negate", 17 * r / 4 + post_pivot, c=t, pivot=post_pivot), [w], "post")
    return circ.build([out], Polydisk(r), "squaring", {"r": r, "t": t}, lambda zs: [zs[0] ** 2],
                      rename={out: "out"})


# ---------------------------------------------------------------------------
# Straight line


def straight_line(p: complex, q: complex, base: tuple[float, float, float] = (5.0, 4.0, 3.0)) -> QFLinkage:
    """Linkage whose marker ``A`` traces exactly the segment ``[p, q]``.

    An inversor (pivot pinned at 0, parameters ``base``) has its input ``D``
    tied by a bar of length ``d = t/2`` to a vertex pinned at ``d*i``, so
    ``D`` runs along an arc of a circle through the pivot and ``A`` (the
    inversor output) along the segment ``Im = t`` of half-length
    ``sqrt(r_out^2 - t^2)``.  The result is rescaled and moved onto ``[p, q]``.

    Returned as a quasifunctional linkage with input ``A`` (the marker) and
    no outputs; its placement reconstructs the mechanism from the marker.
    """
    p, q = complex(p), complex(q)
    if p == q:
        raise LinkageError("straight_line needs p != q")
    a, b, c = base
    inv = peaucellier(a, b, c)
    t = inv.params["t"]
    r_in, r_out = peaucellier_annulus(a, b, c)
    d = t / 2  # 2d = t = sqrt(r_in * r_out) lies strictly inside the annulus
    half = math.sqrt(r_out**2 - t**2)
    names = {v: ("A" if v == "E" else f"inv/{v}") for v in inv.linkage.vertices}
    bl = LinkageBuilder()
    for v in inv.linkage.vertices:
        bl.add_vertex(names[v], pin=inv.linkage.pinned.get(v))
    for e in inv.linkage.edges:
        bl.add_edge(names[e.u], names[e.v], e.length, e.kind)
    bl.add_vertex("anchor", pin=1j * d)
    bl.add_edge("anchor", "inv/D", d)
    local = Segment(-half + 1j * t, half + 1j * t)

    def place(zs, ch):
        m = zs[0]
        D = t * t / np.conj(np.where(m == 0, 1.0, m))
        res = inv.placement([D], ch)
        pos = {names[v]: arr for v, arr in res.positions.items()}
        pos["anchor"] = np.full_like(m, 1j * d)
        ok = res.ok & (np.abs(m.imag - t) <= 1e-9 * t) & (local.margin([m]) >= -1e-9)
        return pos, ok

    g0 = QFLinkage(bl.build(), ("A",), (), local, PrimitivePlacement(place, 2, local), "straight-line",
                   {"base": list(base), "d": d, "t": t, "half": half})
    k = abs(q - p) / (2 * half)
    omega = (q - p) / abs(q - p)
    motion = EuclideanMotion(omega, (p + q) / 2 - omega * k * 1j * t)
    moved = g0.moved(motion, k)
    params = {**moved.params, "p": [p.real, p.imag], "q": [q.real, q.imag]}
    return QFLinkage(moved.linkage, moved.inputs, (), moved.domain, moved.placement, "straight-line", params)


def straight_line_drive(g: QFLinkage):
    """Drive vertex and arc path sweeping the marker of ``straight_line`` from ``p`` to ``q``.

    Returns ``(vertex, path)`` with ``path(s)`` for ``s`` in ``[0, 1]``.
    """
    t, d, k = g.params["t"], g.params["d"], g.params["scale"]
    m = g.params["motion"]
    motion = EuclideanMotion(complex(*m["omega"]), complex(*m["shift"]), m["reflect"])
    a, b, c = g.params["base"]
    r_in, _ = peaucellier_annulus(a, b, c)
    # |D|^2 = 2 d^2 (1 + sin th) on the circle |D - d i| = d
    th = math.asin(r_in**2 / (2 * d * d) - 1)

    def path(s):
        ang = (math.pi - th) + s * (2 * th - math.pi)
        return motion(k * (1j * d + d * np.exp(1j * ang)))

    return "inv/D", path


# ---------------------------------------------------------------------------
# Conjugation


def conjugation(r: float, a: float | None = None, b: float | None = None, c: float | None = None) -> QFLinkage:
    """``z -> conj(z)`` on ``|z| <= r``.

    Two straight-line linkages hold ``A`` on ``[a, b]`` and ``B`` on
    ``[-b, -a]``; a braced rhombus ``A-C-B-D`` of side ``c`` then makes
    ``D`` the mirror image of ``C`` in the real axis.  Needs
    ``b - r > c > a + r``.
    """
    a = r if a is None else a
    c = 3 * r if c is None else c
    b = 5 * r if b is None else b
    if not (r > 0 and 0 < a < b and b - r > c > a + r):
        raise LinkageError(f"conjugation needs b - r > c > a + r, got a={a}, b={b}, c={c}, r={r}")
    rb = LinkageBuilder()
    for u, v in (("A", "C"), ("C", "B"), ("B", "D"), ("D", "A")):
        rb.add_edge(u, v, c)
    rb.joint("A", "C", 0.5, "P")
    rb.joint("B", "D", 0.5, "Q")
    rb.add_edge("P", "Q", c, kind="brace")

    def place(zs, ch):
        C = zs[0]
        y, ok = _safe_sqrt(c * c - C.imag**2, c * c)
        A, B = C.real + y + 0j, C.real - y + 0j
        D = np.conj(C)
        return {"A": A, "B": B, "C": C, "D": D, "P": (A + C) / 2, "Q": (B + D) / 2}, ok

    rdom = Disk(c)
    rhombus = QFLinkage(rb.build(), ("C",), ("D", "A", "B"), rdom, PrimitivePlacement(place, 0, rdom), "rhombus")
    circ = Circuit(["C"])
    out, A, B = circ.add(rhombus, ["C"], "rh")
    circ.add(straight_line(a, b), [A], "L1")
    circ.add(straight_line(-b, -a), [B], "L2")
    return circ.build([out], Polydisk(r), "conjugation", {"r": r, "a": a, "b": b, "c": c},
                      lambda zs: [np.conj(zs[0])], rename={out: "D", A: "A", B: "B"})


def example_one_linkage() -> Linkage:
    """Identity linkage as a bare linkage, with the spokes at the circumradius ``1/sqrt(3)``."""
    return identity_gadget().linkage
