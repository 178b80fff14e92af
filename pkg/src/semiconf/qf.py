"""Quasifunctional linkages and their forward placement.

A :class:`QFLinkage` bundles a linkage, ordered input and output vertices,
a declared domain and a *placement*: a deterministic, numpy-vectorized
procedure that turns input positions plus a branch selector into positions
for every vertex.  Placement is the constructive witness that the outputs
are a function of the inputs.

Vectorized conventions used everywhere in this module:

* a batch of ``N`` plane points is a complex128 array of shape ``(N,)``;
* a branch selector batch is an int8 array of shape ``(N, k)`` with entries
  0/1, one column per binary choice (triangle orientation and the like).
"""
from __future__ import annotations

import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core import (
    EuclideanMotion,
    Linkage,
    LinkageBuilder,
    LinkageError,
    Realization,
    TAU_EXACT,
    rescale,
    transform,
)

Positions = dict[str, np.ndarray]


class PlacementError(RuntimeError):
    pass


class InfeasibleError(PlacementError):
    """Inputs lie outside the domain."""


class DegenerateError(PlacementError):
    """A construction step failed although the inputs are in the declared domain."""


# ---------------------------------------------------------------------------
# Domains


def _as_batch(z) -> np.ndarray:
    return np.atleast_1d(np.asarray(z, dtype=complex))


def _disk_sample(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    r = radius * np.sqrt(rng.random(n))
    return r * np.exp(2j * np.pi * rng.random(n))


class Domain:
    """Declared domain of a quasifunctional linkage."""

    arity: int = 1
    kind: str = ""

    def margin(self, inputs: Sequence[np.ndarray]) -> np.ndarray:
        """Signed relative distance to the boundary; ``>= 0`` inside."""
        raise NotImplementedError

    def contains(self, inputs: Sequence[np.ndarray], tol: float = 1e-12) -> np.ndarray:
        return self.margin(inputs) >= -tol

    def sample(self, rng: np.random.Generator, n: int) -> list[np.ndarray]:
        raise NotImplementedError

    def boundary(self, rng: np.random.Generator, n: int) -> list[np.ndarray]:
        raise NotImplementedError

    @property
    def polyradius(self) -> float | None:
        """Radius ``r`` with the polydisk ``|z_i| <= r`` inside the domain, if any."""
        return None

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        for k, v in vars(self).items():
            d[k] = [v.real, v.imag] if isinstance(v, complex) else v
        return d


@dataclass(frozen=True)
class Disk(Domain):
    radius: float
    center: complex = 0j
    kind = "disk"

    def margin(self, inputs):
        return (self.radius - np.abs(_as_batch(inputs[0]) - self.center)) / self.radius

    def sample(self, rng, n):
        return [self.center + _disk_sample(rng, n, self.radius)]

    def boundary(self, rng, n):
        return [self.center + self.radius * np.exp(2j * np.pi * rng.random(n))]

    @property
    def polyradius(self):
        r = self.radius - abs(self.center)
        return r if r > 0 else None


@dataclass(frozen=True)
class Annulus(Domain):
    r_min: float
    r_max: float
    center: complex = 0j
    kind = "annulus"

    def margin(self, inputs):
        rho = np.abs(_as_batch(inputs[0]) - self.center)
        half = 0.5 * (self.r_max - self.r_min)
        return np.minimum(rho - self.r_min, self.r_max - rho) / half

    def sample(self, rng, n):
        # uniform in area
        r = np.sqrt(self.r_min**2 + (self.r_max**2 - self.r_min**2) * rng.random(n))
        return [self.center + r * np.exp(2j * np.pi * rng.random(n))]

    def boundary(self, rng, n):
        r = np.where(rng.random(n) < 0.5, self.r_min, self.r_max)
        return [self.center + r * np.exp(2j * np.pi * rng.random(n))]


@dataclass(frozen=True)
class PairDistance(Domain):
    """Two inputs with ``|z - w| <= max_dist``; sampled with ``|z| <= sample_radius``."""

    max_dist: float
    sample_radius: float
    kind = "pair-distance"
    arity = 2

    def margin(self, inputs):
        return (self.max_dist - np.abs(_as_batch(inputs[0]) - _as_batch(inputs[1]))) / self.max_dist

    def sample(self, rng, n):
        z = _disk_sample(rng, n, self.sample_radius)
        return [z, z + _disk_sample(rng, n, self.max_dist)]

    def boundary(self, rng, n):
        z = _disk_sample(rng, n, self.sample_radius)
        return [z, z + self.max_dist * np.exp(2j * np.pi * rng.random(n))]

    @property
    def polyradius(self):
        return self.max_dist / 2


@dataclass(frozen=True)
class Polydisk(Domain):
    radius: float
    arity: int = 1
    kind = "polydisk"

    def margin(self, inputs):
        if not inputs:
            return np.ones(1)
        rho = np.max([np.abs(_as_batch(z)) for z in inputs], axis=0)
        return (self.radius - rho) / self.radius

    def sample(self, rng, n):
        return [_disk_sample(rng, n, self.radius) for _ in range(self.arity)]

    def boundary(self, rng, n):
        out = self.sample(rng, n)
        k = rng.integers(0, max(self.arity, 1), n)
        for i in range(self.arity):
            sel = k == i
            out[i][sel] = self.radius * np.exp(2j * np.pi * rng.random(sel.sum()))
        return out

    @property
    def polyradius(self):
        return self.radius


@dataclass(frozen=True)
class Segment(Domain):
    """Points of the straight segment ``[p, q]``."""

    p: complex
    q: complex
    kind = "segment"

    def margin(self, inputs):
        z = _as_batch(inputs[0])
        L = abs(self.q - self.p)
        u = (self.q - self.p) / L
        w = (z - self.p) / u
        along = np.minimum(w.real, L - w.real) / (L / 2)
        off = np.abs(w.imag) / (L / 2)
        return np.where(off > 1e-9, -off, along)

    def sample(self, rng, n):
        return [self.p + (self.q - self.p) * rng.random(n)]

    def boundary(self, rng, n):
        return [np.where(rng.random(n) < 0.5, self.p, self.q).astype(complex)]


@dataclass(frozen=True)
class Plane(Domain):
    """All of the plane (sampling uses a disk of ``sample_radius``)."""

    sample_radius: float = 10.0
    arity: int = 1
    kind = "plane"

    def margin(self, inputs):
        return np.ones_like(np.abs(_as_batch(inputs[0]))) if inputs else np.ones(1)

    def sample(self, rng, n):
        return [_disk_sample(rng, n, self.sample_radius) for _ in range(self.arity)]

    def boundary(self, rng, n):
        return self.sample(rng, n)

    @property
    def polyradius(self):
        return math.inf


# ---------------------------------------------------------------------------
# Placements


class PlacementResult(NamedTuple):
    positions: Positions
    ok: np.ndarray
    margin: np.ndarray


class Placement:
    n_choices: int = 0

    def __call__(self, inputs: Sequence[np.ndarray], choices: np.ndarray) -> PlacementResult:
        raise NotImplementedError


class PrimitivePlacement(Placement):
    """Wraps a function ``fn(inputs, choices) -> (positions, ok)``."""

    def __init__(self, fn: Callable, n_choices: int, domain: Domain):
        self.fn = fn
        self.n_choices = n_choices
        self.domain = domain

    def __call__(self, inputs, choices):
        inputs = [_as_batch(z) for z in inputs]
        pos, ok = self.fn(inputs, choices)
        return PlacementResult(pos, ok, self.domain.margin(inputs))


class MovedPlacement(Placement):
    """Placement of a gadget that was rescaled by ``k`` and then moved by ``motion``."""

    def __init__(self, base: Placement, motion: EuclideanMotion, k: float = 1.0):
        self.base, self.motion, self.k = base, motion, k
        self.n_choices = base.n_choices

    def __call__(self, inputs, choices):
        inv = self.motion.inverse()
        local = [inv(_as_batch(z)) / self.k for z in inputs]
        res = self.base(local, choices)
        pos = {v: self.motion(self.k * p) for v, p in res.positions.items()}
        return PlacementResult(pos, res.ok, res.margin)


@dataclass(frozen=True)
class Step:
    placement: Placement
    args: tuple[str, ...]
    rename: Mapping[str, str]
    offset: int


class ChainPlacement(Placement):
    """Run child placements in order, feeding each from already placed vertices."""

    def __init__(self, inputs: Sequence[str], pins: Mapping[str, complex], steps: Sequence[Step]):
        self.inputs = tuple(inputs)
        self.pins = dict(pins)
        self.steps = tuple(steps)
        self.n_choices = sum(s.placement.n_choices for s in steps)

    def __call__(self, inputs, choices):
        inputs = [_as_batch(z) for z in inputs]
        n = len(inputs[0]) if inputs else len(choices)
        pos: Positions = {v: np.full(n, z, dtype=complex) for v, z in self.pins.items()}
        pos.update(zip(self.inputs, inputs))
        ok = np.ones(n, dtype=bool)
        margin = np.full(n, np.inf)
        for s in self.steps:
            args = [pos[a] for a in s.args]
            k = s.placement.n_choices
            res = s.placement(args, choices[:, s.offset : s.offset + k])
            for local, arr in res.positions.items():
                pos[s.rename[local]] = arr
            ok &= res.ok
            margin = np.minimum(margin, res.margin)
        return PlacementResult(pos, ok, margin)


# ---------------------------------------------------------------------------
# QFLinkage


@dataclass(frozen=True, eq=False)
class QFLinkage:
    """Linkage whose outputs are ``func`` of its inputs on every realization."""

    linkage: Linkage
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    domain: Domain
    placement: Placement
    kind: str = "gadget"
    params: Mapping[str, object] = field(default_factory=dict)
    func: Callable[[Sequence[np.ndarray]], list[np.ndarray]] | None = None

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        if len(set(self.inputs)) != len(self.inputs) or len(set(self.outputs)) != len(self.outputs):
            raise LinkageError("input and output vertices must not repeat")
        for v in self.inputs + self.outputs:
            if v not in self.linkage:
                raise LinkageError(f"I/O vertex {v!r} is not in the linkage")

    @property
    def n_choices(self) -> int:
        return self.placement.n_choices

    @property
    def n_branches(self) -> int:
        return 2**self.n_choices

    def branch_bits(self, branch: int | Sequence[int] | np.ndarray) -> np.ndarray:
        """Decode an integer branch index (bit ``j`` is choice ``j``) or pass through bit vectors."""
        if isinstance(branch, (int, np.integer)):
            if not 0 <= branch < self.n_branches:
                raise ValueError(f"branch {branch} out of range for {self.n_branches} branches")
            return ((int(branch) >> np.arange(self.n_choices)) & 1).astype(np.int8)[None, :]
        bits = np.asarray(branch, dtype=np.int8)
        if self.n_choices == 0:
            return np.zeros((bits.shape[0] if bits.ndim == 2 else 1, 0), dtype=np.int8)
        return bits.reshape(-1, self.n_choices)

    def place(self, inputs: Sequence, choices: np.ndarray | None = None) -> PlacementResult:
        """Vectorized forward placement (no exceptions; see ``ok``)."""
        inputs = [_as_batch(z) for z in inputs]
        n = len(inputs[0]) if inputs else 1
        if choices is None:
            choices = np.zeros((n, self.n_choices), dtype=np.int8)
        choices = np.asarray(choices, dtype=np.int8)
        if self.n_choices == 0:
            choices = np.zeros((max(choices.shape[0] if choices.ndim == 2 else 1, 1), 0), dtype=np.int8)
        else:
            choices = choices.reshape(-1, self.n_choices)
        if choices.shape[0] == 1 and n > 1:
            choices = np.repeat(choices, n, axis=0)
        return self.placement(inputs, choices)

    def evaluate(self, inputs: Sequence) -> list[np.ndarray]:
        if self.func is None:
            raise ValueError(f"{self.kind} has no reference function")
        return [np.asarray(o, dtype=complex) for o in self.func([_as_batch(z) for z in inputs])]

    def moved(self, g: EuclideanMotion, k: float = 1.0) -> "QFLinkage":
        """Rescale by ``k`` then apply ``g``; the computed map is conjugated accordingly."""
        lk = transform(rescale(self.linkage, k), g)
        dom = _moved_domain(self.domain, g, k)
        f = None
        if self.func is not None:
            base = self.func
            inv = g.inverse()
            f = lambda zs: [g(k * o) for o in base([inv(z) / k for z in zs])]  # noqa: E731
        return QFLinkage(
            lk, self.inputs, self.outputs, dom, MovedPlacement(self.placement, g, k),
            self.kind, {**self.params, "scale": k, "motion": _motion_dict(g)}, f,
        )


def _motion_dict(g: EuclideanMotion) -> dict:
    return {"omega": [g.omega.real, g.omega.imag], "shift": [g.shift.real, g.shift.imag], "reflect": g.reflect}


def _moved_domain(d: Domain, g: EuclideanMotion, k: float) -> Domain:
    if isinstance(d, Segment):
        return Segment(g(k * d.p), g(k * d.q))
    if isinstance(d, Disk):
        return Disk(d.radius * k, g(k * d.center))
    if isinstance(d, Annulus):
        return Annulus(d.r_min * k, d.r_max * k, g(k * d.center))
    if isinstance(d, PairDistance):
        return PairDistance(d.max_dist * k, d.sample_radius * k)
    if isinstance(d, Polydisk) and d.arity == 1:
        return Disk(d.radius * k, g(0j))
    if isinstance(d, Plane):
        return d
    raise LinkageError(f"cannot move a {d.kind} domain")


def forward_place(g: QFLinkage, inputs: Sequence[complex], branch: int | Sequence[int] = 0,
                  strict: bool = True) -> Realization:
    """Place one realization of ``g``.

    Raises :class:`InfeasibleError` for inputs outside the declared domain
    (when ``strict``) or for which the construction has no real solution,
    and :class:`DegenerateError` if a step fails for inputs that are inside
    the declared domain.
    """
    bits = g.branch_bits(branch)
    res = g.place([complex(z) for z in inputs], bits)
    inside = bool(g.domain.contains([_as_batch(z) for z in inputs], tol=1e-12)[0]) if g.inputs else True
    if strict and not inside:
        raise InfeasibleError(f"inputs {tuple(inputs)} are outside the declared {g.domain.kind} domain")
    if not res.ok[0]:
        if inside:
            raise DegenerateError(f"degenerate construction step at inputs {tuple(inputs)}")
        raise InfeasibleError(f"no realization through inputs {tuple(inputs)}")
    return Realization({v: complex(p[0]) for v, p in res.positions.items()})


# ---------------------------------------------------------------------------
# Composition


class Circuit:
    """Assemble gadgets into one quasifunctional linkage.

    Each :meth:`add` identifies the gadget's inputs with existing vertices and
    namespaces its remaining vertices under ``prefix``.  Pinned vertices at
    the same point are shared between gadgets.
    """

    def __init__(self, inputs: Sequence[str]):
        self.builder = LinkageBuilder()
        self.inputs = tuple(inputs)
        for v in self.inputs:
            self.builder.add_vertex(v)
        self._pins: dict[complex, str] = {}
        self.steps: list[Step] = []
        self.n_choices = 0
        self.log: list[dict] = []

    def constant(self, z: complex, name: str | None = None) -> str:
        z = complex(z)
        v = self._pins.get(z)
        if v is None:
            v = name or f"const({z.real:g}{z.imag:+g}i)"
            self.builder.add_vertex(v, pin=z)
            self._pins[z] = v
        return v

    def add(self, g: QFLinkage, args: Sequence[str], prefix: str, note: Mapping | None = None) -> tuple[str, ...]:
        if len(args) != len(g.inputs):
            raise LinkageError(f"{g.kind} takes {len(g.inputs)} inputs, got {len(args)}")
        if len(set(args)) != len(args):
            raise LinkageError(f"{g.kind}: repeated argument vertices {args}")
        mapping: dict[str, str] = dict(zip(g.inputs, args))
        for v in g.linkage.vertices:
            if v in mapping:
                continue
            z = g.linkage.pinned.get(v)
            if z is not None:
                shared = self._pins.get(z)
                if shared is not None and shared not in args:
                    mapping[v] = shared
                    continue
            name = f"{prefix}/{v}"
            if name in self.builder.vertices:
                raise LinkageError(f"vertex name clash on {name!r}")
            mapping[v] = name
            self.builder.add_vertex(name, pin=z)
            if z is not None and z not in self._pins:
                self._pins[z] = name
        for e in g.linkage.edges:
            self.builder.add_edge(mapping[e.u], mapping[e.v], e.length, e.kind)
        self.steps.append(Step(g.placement, tuple(args), mapping, self.n_choices))
        self.n_choices += g.n_choices
        entry = {"gadget": prefix, "kind": g.kind, "params": dict(g.params), "domain": g.domain.to_dict()}
        if note:
            entry.update(note)
        self.log.append(entry)
        return tuple(mapping[o] for o in g.outputs)

    def build(self, outputs: Sequence[str], domain: Domain, kind: str, params: Mapping | None = None,
              func: Callable | None = None, rename: Mapping[str, str] | None = None) -> QFLinkage:
        linkage = self.builder.build()
        pins = dict(linkage.pinned)
        steps = self.steps
        inputs = self.inputs
        if rename:
            from .core import rename as _rename

            linkage = _rename(linkage, rename)
            f = lambda v: rename.get(v, v)  # noqa: E731
            pins = {f(v): z for v, z in pins.items()}
            steps = [Step(s.placement, tuple(f(a) for a in s.args), {k: f(v) for k, v in s.rename.items()}, s.offset)
                     for s in steps]
            inputs = tuple(f(v) for v in inputs)
            outputs = [f(v) for v in outputs]
        placement = ChainPlacement(inputs, pins, steps)
        return QFLinkage(linkage, inputs, tuple(outputs), domain, placement, kind, dict(params or {}), func)


def edge_residuals(linkage: Linkage, positions: Positions) -> np.ndarray:
    """Max over edges and pins of the constraint residual, per sample."""
    worst = None
    for e in linkage.edges:
        r = np.abs(np.abs(positions[e.u] - positions[e.v]) - e.length)
        worst = r if worst is None else np.maximum(worst, r)
    for v, z in linkage.pinned.items():
        r = np.abs(positions[v] - z)
        worst = r if worst is None else np.maximum(worst, r)
    if worst is None:
        n = len(next(iter(positions.values()))) if positions else 1
        return np.zeros(n)
    return worst


def realization_at(res: PlacementResult, i: int) -> Realization:
    return Realization({v: complex(p[i]) for v, p in res.positions.items()})


__all__ = [
    "Annulus", "ChainPlacement", "Circuit", "DegenerateError", "Disk", "Domain", "InfeasibleError",
    "MovedPlacement", "PairDistance", "Placement", "PlacementError", "PlacementResult", "Plane",
    "Polydisk", "PrimitivePlacement", "QFLinkage", "Segment", "Step", "edge_residuals", "forward_place",
    "realization_at", "TAU_EXACT",
]
