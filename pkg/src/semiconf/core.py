"""Linkages, realizations, marker sets and the graph surgeries built on them.

A linkage is a graph whose edges carry positive lengths, together with a
partial map pinning some vertices to points of the plane.  Plane points are
Python/numpy complex numbers throughout.

All values here are immutable; every operation returns a new object.
"""
from __future__ import annotations

import cmath
import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType

import numpy as np

logger = logging.getLogger(__name__)

#: constraint tolerance for exactly constructed realizations (plane units)
TAU_EXACT = 1e-9
#: constraint tolerance for numerically solved realizations
TAU_SOLVE = 1e-6
#: two pins closer than this are considered the same point
PIN_EQ_TOL = 1e-12

EDGE_KINDS = ("bar", "brace", "cable")

VertexId = str


class LinkageError(ValueError):
    """Raised when a linkage operation receives inconsistent data."""


class PinConflict(LinkageError):
    """Two identified vertices are pinned at different points."""


def edge_key(u: VertexId, v: VertexId) -> tuple[VertexId, VertexId]:
    return (u, v) if u <= v else (v, u)


@dataclass(frozen=True)
class Edge:
    """Bar between two vertices.

    ``kind`` only affects rendering and surgery: ``"brace"`` marks the
    rigidifying midpoint-to-midpoint bars, ``"cable"`` the two halves of a
    simulated cable or telescoping edge.
    """

    u: VertexId
    v: VertexId
    length: float
    kind: str = "bar"

    def __post_init__(self):
        if self.v < self.u:
            u, v = self.v, self.u
            object.__setattr__(self, "u", u)
            object.__setattr__(self, "v", v)
        object.__setattr__(self, "length", float(self.length))

    @property
    def key(self) -> tuple[VertexId, VertexId]:
        return (self.u, self.v)

    def other(self, w: VertexId) -> VertexId:
        return self.v if w == self.u else self.u


@dataclass(frozen=True, eq=False)
class Linkage:
    """A planar linkage ``(L, l, V, mu)``.

    The constructor accepts any data, including invalid data read from a
    file; call :func:`validate` to get a list of violations.
    """

    vertices: tuple[VertexId, ...] = ()
    edges: tuple[Edge, ...] = ()
    pinned: Mapping[VertexId, complex] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(
            self, "pinned", MappingProxyType({k: complex(z) for k, z in self.pinned.items()})
        )

    # -- lookups -------------------------------------------------------
    @cached_property
    def index(self) -> dict[VertexId, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def edge_map(self) -> dict[tuple[VertexId, VertexId], Edge]:
        return {e.key: e for e in self.edges}

    @cached_property
    def adjacency(self) -> dict[VertexId, list[VertexId]]:
        adj: dict[VertexId, list[VertexId]] = {v: [] for v in self.vertices}
        for e in self.edges:
            if e.u in adj and e.v in adj:
                adj[e.u].append(e.v)
                adj[e.v].append(e.u)
        return adj

    def has_edge(self, u: VertexId, v: VertexId) -> bool:
        return edge_key(u, v) in self.edge_map

    def edge(self, u: VertexId, v: VertexId) -> Edge:
        return self.edge_map[edge_key(u, v)]

    def __contains__(self, v: object) -> bool:
        return v in self.index

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def total_length(self) -> float:
        return float(sum(e.length for e in self.edges))

    def components(self) -> list[list[VertexId]]:
        seen: set[VertexId] = set()
        comps = []
        for v in self.vertices:
            if v in seen:
                continue
            stack, comp = [v], []
            seen.add(v)
            while stack:
                w = stack.pop()
                comp.append(w)
                for x in self.adjacency[w]:
                    if x not in seen:
                        seen.add(x)
                        stack.append(x)
            comps.append(comp)
        return comps

    def is_connected(self) -> bool:
        return len(self.components()) <= 1

    # -- equality ------------------------------------------------------
    def _signature(self):
        return (
            frozenset(self.vertices),
            frozenset((e.u, e.v, e.length, e.kind) for e in self.edges),
            frozenset(self.pinned.items()),
        )

    def __eq__(self, other):
        if not isinstance(other, Linkage):
            return NotImplemented
        return self._signature() == other._signature()

    def __hash__(self):
        return hash(self._signature())

    def isclose(self, other: "Linkage", tol: float = 1e-9) -> bool:
        """Equality of structure with lengths and pins compared to ``tol``."""
        if set(self.vertices) != set(other.vertices):
            return False
        if set(self.edge_map) != set(other.edge_map):
            return False
        for k, e in self.edge_map.items():
            f = other.edge_map[k]
            if abs(e.length - f.length) > tol or e.kind != f.kind:
                return False
        if set(self.pinned) != set(other.pinned):
            return False
        return all(abs(self.pinned[v] - other.pinned[v]) <= tol for v in self.pinned)

    def __repr__(self):
        return f"Linkage({len(self.vertices)} vertices, {len(self.edges)} edges, {len(self.pinned)} pinned)"


class LinkageBuilder:
    """Mutable helper for assembling a :class:`Linkage` edge by edge.

    Unlike the lenient :class:`Linkage` constructor, the builder rejects
    zero-length, self and duplicate edges as they are added.
    """

    def __init__(self, base: Linkage | None = None):
        self.vertices: dict[VertexId, None] = {}
        self.edges: dict[tuple[VertexId, VertexId], Edge] = {}
        self.pinned: dict[VertexId, complex] = {}
        if base is not None:
            for v in base.vertices:
                self.vertices[v] = None
            for e in base.edges:
                self.edges[e.key] = e
            self.pinned.update(base.pinned)

    def add_vertex(self, v: VertexId, pin: complex | None = None) -> VertexId:
        if not v:
            raise LinkageError("vertex names must be non-empty")
        self.vertices.setdefault(v, None)
        if pin is not None:
            self.pin(v, pin)
        return v

    def pin(self, v: VertexId, z: complex) -> None:
        z = complex(z)
        old = self.pinned.get(v)
        if old is not None and abs(old - z) > PIN_EQ_TOL:
            raise PinConflict(f"pin conflict at {v!r}: {old} vs {z}")
        self.pinned[v] = z

    def add_edge(self, u: VertexId, v: VertexId, length: float, kind: str = "bar") -> Edge:
        if u == v:
            raise LinkageError(f"self-edge at {u!r}")
        if not length > 0:
            raise LinkageError(f"zero-length edge {u!r}-{v!r}")
        if kind not in EDGE_KINDS:
            raise LinkageError(f"unknown edge kind {kind!r}")
        for w in (u, v):
            self.vertices.setdefault(w, None)
        e = Edge(u, v, length, kind)
        old = self.edges.get(e.key)
        if old is not None:
            if abs(old.length - e.length) > 1e-12 * max(1.0, e.length):
                raise LinkageError(f"duplicate edge {u!r}-{v!r} with different lengths")
            return old
        self.edges[e.key] = e
        return e

    def joint(self, u: VertexId, v: VertexId, at: float, name: VertexId) -> VertexId:
        """Interior joint on the existing bar ``u-v`` at fraction ``at`` from ``u``."""
        e = self.edges.get(edge_key(u, v))
        if e is None:
            raise LinkageError(f"no edge {u!r}-{v!r} to put a joint on")
        if not 0.0 < at < 1.0:
            raise LinkageError(f"joint fraction must lie in (0, 1), got {at}")
        self.add_edge(u, name, at * e.length)
        self.add_edge(name, v, (1.0 - at) * e.length)
        return name

    def chain(self, u: VertexId, v: VertexId, c: float, d: float, name: VertexId) -> VertexId:
        """Two-bar chain ``u-name-v`` with lengths ``c`` and ``d`` (cable halves)."""
        self.add_edge(u, name, c, kind="cable")
        self.add_edge(name, v, d, kind="cable")
        return name

    def build(self) -> Linkage:
        return Linkage(tuple(self.vertices), tuple(self.edges.values()), dict(self.pinned))


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations and not self.warnings

    @property
    def structurally_ok(self) -> bool:
        """No hard violations; warnings only mean the configuration space is empty."""
        return not self.violations

    def __bool__(self):
        return self.ok

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": list(self.violations), "warnings": list(self.warnings)}


def validate(linkage: Linkage) -> ValidationReport:
    violations: list[str] = []
    warnings: list[str] = []
    names = set()
    for v in linkage.vertices:
        if not v:
            violations.append("empty vertex name")
        if v in names:
            violations.append(f"duplicate vertex {v!r}")
        names.add(v)
    seen: set[tuple[str, str]] = set()
    for e in linkage.edges:
        tag = f"{e.u}-{e.v}"
        if e.u == e.v:
            violations.append(f"self-edge {tag}")
        if not e.length > 0:
            violations.append(f"zero-length edge {tag}")
        if e.key in seen:
            violations.append(f"duplicate edge {tag}")
        seen.add(e.key)
        for w in (e.u, e.v):
            if w not in names:
                violations.append(f"dangling vertex reference {w!r} in edge {tag}")
        if e.u in linkage.pinned and e.v in linkage.pinned:
            d = abs(linkage.pinned[e.u] - linkage.pinned[e.v])
            if abs(d - e.length) > TAU_EXACT * max(1.0, e.length):
                warnings.append(f"pinned pair inconsistent: {tag} has length {e.length} but pins are {d} apart")
    for v in linkage.pinned:
        if v not in names:
            violations.append(f"dangling vertex reference {v!r} in pins")
    return ValidationReport(tuple(violations), tuple(warnings))


# ---------------------------------------------------------------------------
# Euclidean motions


@dataclass(frozen=True)
class EuclideanMotion:
    """``z -> omega*z + shift`` or, with ``reflect``, ``omega*conj(z) + shift``."""

    omega: complex = 1.0 + 0j
    shift: complex = 0j
    reflect: bool = False

    def __post_init__(self):
        if abs(abs(self.omega) - 1.0) > TAU_EXACT:
            raise LinkageError(f"|omega| must be 1, got {abs(self.omega)}")
        object.__setattr__(self, "omega", complex(self.omega))
        object.__setattr__(self, "shift", complex(self.shift))

    @classmethod
    def rotation(cls, angle: float, center: complex = 0j) -> "EuclideanMotion":
        w = cmath.exp(1j * angle)
        return cls(w, center - w * center)

    @classmethod
    def translation(cls, shift: complex) -> "EuclideanMotion":
        return cls(1.0, shift)

    @classmethod
    def reflection(cls, p: complex, q: complex) -> "EuclideanMotion":
        """Reflection across the line through ``p`` and ``q``."""
        if abs(q - p) == 0:
            raise LinkageError("reflection line needs two distinct points")
        u = (q - p) / abs(q - p)
        w = u * u
        return cls(w, p - w * p.conjugate(), reflect=True)

    def __call__(self, z):
        if self.reflect:
            z = np.conj(z) if isinstance(z, np.ndarray) else complex(z).conjugate()
        return self.omega * z + self.shift

    def inverse(self) -> "EuclideanMotion":
        if self.reflect:
            # z = omega*conj(x) + s  =>  x = conj(omega)^-1... = omega * conj(z - s)
            return EuclideanMotion(self.omega, -self.omega * self.shift.conjugate(), True)
        inv = self.omega.conjugate()
        return EuclideanMotion(inv, -inv * self.shift)

    def compose(self, other: "EuclideanMotion") -> "EuclideanMotion":
        """``self o other``."""
        if self.reflect:
            om = self.omega * other.omega.conjugate()
            sh = self.omega * other.shift.conjugate() + self.shift
        else:
            om = self.omega * other.omega
            sh = self.omega * other.shift + self.shift
        return EuclideanMotion(om, sh, self.reflect != other.reflect)

    @property
    def is_identity(self) -> bool:
        return not self.reflect and self.omega == 1 and self.shift == 0


# ---------------------------------------------------------------------------
# Realizations


@dataclass(frozen=True, eq=False)
class Realization:
    """A placement of every vertex in the plane."""

    positions: Mapping[VertexId, complex]

    def __post_init__(self):
        object.__setattr__(
            self, "positions", MappingProxyType({k: complex(z) for k, z in self.positions.items()})
        )

    def __getitem__(self, v: VertexId) -> complex:
        return self.positions[v]

    def edge_residuals(self, linkage: Linkage) -> np.ndarray:
        """``| |phi(u)-phi(v)| - l |`` for every edge, in edge order."""
        p = self.positions
        return np.array([abs(abs(p[e.u] - p[e.v]) - e.length) for e in linkage.edges], dtype=float)

    def pin_errors(self, linkage: Linkage) -> np.ndarray:
        return np.array([abs(self.positions[v] - z) for v, z in linkage.pinned.items()], dtype=float)

    def max_residual(self, linkage: Linkage) -> float:
        r = self.edge_residuals(linkage)
        p = self.pin_errors(linkage)
        return float(max(r.max(initial=0.0), p.max(initial=0.0)))

    def is_realization(self, linkage: Linkage, tol: float = TAU_SOLVE) -> bool:
        if set(self.positions) != set(linkage.vertices):
            return False
        return self.max_residual(linkage) < tol

    def restrict(self, markers: Sequence[VertexId]) -> tuple[complex, ...]:
        return tuple(self.positions[w] for w in markers)

    def moved(self, g: EuclideanMotion) -> "Realization":
        return Realization({v: g(z) for v, z in self.positions.items()})

    def as_array(self, order: Sequence[VertexId]) -> np.ndarray:
        return np.array([self.positions[v] for v in order], dtype=complex)

    def to_dict(self) -> dict:
        return {v: [z.real, z.imag] for v, z in sorted(self.positions.items())}


@dataclass(frozen=True)
class MarkerSet:
    """Ordered, repetition-free list of marker vertices ``W``."""

    vertices: tuple[VertexId, ...]

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        if len(set(self.vertices)) != len(self.vertices):
            raise LinkageError("marker set has repeated vertices")

    def check(self, linkage: Linkage) -> "MarkerSet":
        missing = [w for w in self.vertices if w not in linkage]
        if missing:
            raise LinkageError(f"markers not in linkage: {missing}")
        return self

    def __iter__(self):
        return iter(self.vertices)

    def __len__(self):
        return len(self.vertices)


# ---------------------------------------------------------------------------
# Surgeries


def rename(linkage: Linkage, mapping: Mapping[VertexId, VertexId]) -> Linkage:
    """Rename vertices; names absent from ``mapping`` are kept."""
    f = lambda v: mapping.get(v, v)  # noqa: E731
    verts = [f(v) for v in linkage.vertices]
    if len(set(verts)) != len(verts):
        raise LinkageError("rename would merge vertices; use splice instead")
    edges = [Edge(f(e.u), f(e.v), e.length, e.kind) for e in linkage.edges]
    return Linkage(verts, edges, {f(v): z for v, z in linkage.pinned.items()})


def prefixed(linkage: Linkage, prefix: str) -> Linkage:
    if not prefix:
        return linkage
    return rename(linkage, {v: f"{prefix}/{v}" for v in linkage.vertices})


def disjoint_union(l1: Linkage, l2: Linkage, prefixes: tuple[str, str] = ("0", "1")) -> Linkage:
    """Tagged union; vertex ``v`` of ``l1`` becomes ``"<prefix0>/v"`` etc."""
    a, b = prefixed(l1, prefixes[0]), prefixed(l2, prefixes[1])
    clash = set(a.vertices) & set(b.vertices)
    if clash:
        raise LinkageError(f"prefixes do not separate vertex names: {sorted(clash)[:3]}")
    return Linkage(a.vertices + b.vertices, a.edges + b.edges, {**a.pinned, **b.pinned})


def splice(
    outer: Linkage,
    inner: Linkage,
    identify: Iterable[tuple[VertexId, VertexId]],
    prefix: str = "in",
) -> Linkage:
    """Glue ``inner`` onto ``outer`` by identifying vertex pairs.

    Identified inner vertices take the outer name; the others are renamed
    ``"<prefix>/name"``.  Merged vertices keep a pin if only one side has it;
    pins that disagree raise :class:`PinConflict`.
    """
    identify = list(identify)
    outs = [o for o, _ in identify]
    ins = [i for _, i in identify]
    if len(set(outs)) != len(outs) or len(set(ins)) != len(ins):
        raise LinkageError("identified vertices must be distinct on each side")
    for o, i in identify:
        if o not in outer:
            raise LinkageError(f"{o!r} not in outer linkage")
        if i not in inner:
            raise LinkageError(f"{i!r} not in inner linkage")
    mapping = {v: f"{prefix}/{v}" if prefix else v for v in inner.vertices}
    mapping.update({i: o for o, i in identify})
    fresh = [mapping[v] for v in inner.vertices if v not in ins]
    clash = set(fresh) & set(outer.vertices)
    if clash:
        raise LinkageError(f"splice prefix {prefix!r} collides with outer names: {sorted(clash)[:3]}")

    b = LinkageBuilder(outer)
    for v in inner.vertices:
        b.add_vertex(mapping[v])
    for v, z in inner.pinned.items():
        try:
            b.pin(mapping[v], z)
        except PinConflict as exc:
            raise PinConflict(f"pin conflict: {exc}") from None
    for e in inner.edges:
        u, v = mapping[e.u], mapping[e.v]
        if u == v:
            raise LinkageError(f"splice collapses edge {e.u}-{e.v} to a point")
        b.add_edge(u, v, e.length, e.kind)
    return b.build()


def pin(linkage: Linkage, v: VertexId, z: complex) -> Linkage:
    if v not in linkage:
        raise LinkageError(f"no vertex {v!r}")
    old = linkage.pinned.get(v)
    if old is not None and abs(old - complex(z)) > PIN_EQ_TOL:
        raise PinConflict(f"{v!r} is already pinned at {old}")
    return Linkage(linkage.vertices, linkage.edges, {**linkage.pinned, v: complex(z)})


def unpin(linkage: Linkage, v: VertexId) -> Linkage:
    if v not in linkage:
        raise LinkageError(f"no vertex {v!r}")
    pins = dict(linkage.pinned)
    pins.pop(v, None)
    return Linkage(linkage.vertices, linkage.edges, pins)


def transform(linkage: Linkage, g: EuclideanMotion) -> Linkage:
    """Move every pin by ``g``; lengths are unchanged."""
    return Linkage(linkage.vertices, linkage.edges, {v: g(z) for v, z in linkage.pinned.items()})


def rescale(linkage: Linkage, k: float) -> Linkage:
    """Multiply every edge length and every pin coordinate by ``k > 0``."""
    if not k > 0:
        raise LinkageError(f"rescale factor must be positive, got {k}")
    edges = [Edge(e.u, e.v, e.length * k, e.kind) for e in linkage.edges]
    return Linkage(linkage.vertices, edges, {v: z * k for v, z in linkage.pinned.items()})


def without_edges(linkage: Linkage, kind: str) -> Linkage:
    """Drop all edges of one kind, e.g. ``without_edges(l, "brace")``."""
    return Linkage(linkage.vertices, [e for e in linkage.edges if e.kind != kind], linkage.pinned)


# -- anchor frame -----------------------------------------------------------

FRAME_POINTS: tuple[complex, ...] = (0j, 1 + 0j, 1j, -1 - 1j)
FRAME_NAMES = ("frame/0", "frame/1", "frame/i", "frame/-1-i")


def _pinned_at(linkage: Linkage, z: complex) -> VertexId | None:
    for v in linkage.vertices:
        p = linkage.pinned.get(v)
        if p is not None and abs(p - z) <= PIN_EQ_TOL:
            return v
    return None


def frame_vertices(linkage: Linkage) -> tuple[VertexId | None, ...]:
    """Vertices pinned at 0, 1, i and -1-i (``None`` where absent)."""
    return tuple(_pinned_at(linkage, z) for z in FRAME_POINTS)


def add_anchor_frame(linkage: Linkage) -> Linkage:
    """Pin vertices at 0, 1, i, -1-i and join all pinned pairs by bars.

    Missing frame points get isolated pinned vertices.  Every pair of pinned
    vertices at distinct points that is not already joined gets a bar of
    length ``|z_i - z_j|``; coincident pins are skipped since a zero-length
    bar is not allowed.
    """
    b = LinkageBuilder(linkage)
    for name, z in zip(FRAME_NAMES, FRAME_POINTS):
        if _pinned_at(linkage, z) is None:
            if name in b.vertices:
                raise LinkageError(f"vertex {name!r} exists but is not pinned at {z}")
            b.add_vertex(name, pin=z)
    pins = [(v, b.pinned[v]) for v in b.vertices if v in b.pinned]
    for i, (u, zu) in enumerate(pins):
        for v, zv in pins[i + 1 :]:
            d = abs(zu - zv)
            if d <= PIN_EQ_TOL:
                logger.info("anchor frame: skipping coincident pins %s, %s", u, v)
                continue
            if edge_key(u, v) not in b.edges:
                b.add_edge(u, v, d)
    return b.build()


def relax_anchors(linkage: Linkage, keep: int) -> Linkage:
    """Unpin everything except the first ``keep`` frame anchors (0, then 1, then i)."""
    if keep not in (0, 1, 2, 3):
        raise LinkageError(f"keep must be 0, 1, 2 or 3, got {keep}")
    frame = frame_vertices(linkage)
    if any(v is None for v in frame):
        raise LinkageError("linkage does not carry the anchor frame")
    kept = set(frame[:keep])
    for v, w in ((a, b) for i, a in enumerate(frame) for b in frame[i + 1 :]):
        if not linkage.has_edge(v, w):
            raise LinkageError("anchor frame edges are missing")
    return Linkage(linkage.vertices, linkage.edges, {v: z for v, z in linkage.pinned.items() if v in kept})


def distance_bound_ok(linkage: Linkage, realization: Realization) -> tuple[bool, float, float]:
    """Check that every vertex lies within ``sum of lengths`` of a pin.

    Returns ``(ok, max_radius, d)``.  Only meaningful for connected
    linkages with a pin.
    """
    d = linkage.total_length
    if not linkage.pinned:
        return False, math.inf, d
    z0 = next(iter(linkage.pinned.values()))
    r = max((abs(z - z0) for z in realization.positions.values()), default=0.0)
    return r <= d + TAU_SOLVE, r, d
