"""Sampled evidence about linkages: quasifunctionality, semiconfiguration
clouds, isometry invariance and compactness.

Nothing here proves anything; every check samples and reports what it saw.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .core import TAU_EXACT, TAU_SOLVE, EuclideanMotion, Linkage, LinkageError, MarkerSet, Realization
from .expr import Expr, evaluate, parse
from .qf import QFLinkage, edge_residuals
from .solver import SolveProblem, sample_configurations, solve
from .solver.engine import DEDUP_RES, _Compiled

#: translations for random motions are drawn from a disk of this radius
MOTION_RADIUS = 10.0


# ---------------------------------------------------------------------------
# Quasifunctionality


@dataclass
class VerificationReport:
    kind: str
    samples: int
    max_error: float
    max_residual: float
    min_margin: float
    branches_tested: int
    n_branches: int
    solver_checks: int = 0
    solver_converged: int = 0
    solver_max_error: float = 0.0
    tol: float = 1e-9
    properties: dict[str, bool] = field(default_factory=dict)
    seed: int = 0

    @property
    def branch_coverage(self) -> float:
        return self.branches_tested / self.n_branches

    @property
    def passed(self) -> bool:
        return all(self.properties.values())

    def __bool__(self):
        return self.passed

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "passed": self.passed, "samples": self.samples, "tol": self.tol,
            "seed": self.seed, "max_error": self.max_error, "max_residual": self.max_residual,
            "min_margin": self.min_margin, "branches_tested": self.branches_tested,
            "n_branches": self.n_branches, "branch_coverage": self.branch_coverage,
            "solver_checks": self.solver_checks, "solver_converged": self.solver_converged,
            "solver_max_error": self.solver_max_error, "properties": dict(self.properties),
        }

    def summary(self) -> str:
        flags = ", ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in self.properties.items())
        return (f"{self.kind}: {'PASS' if self.passed else 'FAIL'} ({self.samples} samples, "
                f"max error {self.max_error:.3g}, max residual {self.max_residual:.3g}, "
                f"branches {self.branches_tested}/{self.n_branches}; {flags})")


def _reference(g: QFLinkage, f) -> Callable[[list[np.ndarray]], list[np.ndarray]]:
    if f is None:
        if g.func is None:
            raise ValueError(f"{g.kind} has no reference function; pass one")
        return g.evaluate
    if isinstance(f, str):
        f = parse(f)
    if isinstance(f, Expr):
        e = f
        return lambda zs: [np.asarray(evaluate(e, zs), dtype=complex)]
    if not callable(f):
        raise TypeError("reference must be an expression, a string or a callable")
    return _wrap(f, len(g.outputs))


def _wrap(f, n_out):
    def call(zs):
        out = f(zs)
        if n_out == 1 and not isinstance(out, (list, tuple)):
            out = [out]
        return [np.asarray(o, dtype=complex) for o in out]

    return call


def _branch_sets(g: QFLinkage, n: int, rng: np.random.Generator, max_enum: int, rounds: int):
    """Yield ``(n, n_choices)`` bit arrays covering the branches to test."""
    k = g.n_choices
    if g.n_branches <= max_enum:
        for b in range(g.n_branches):
            yield np.repeat(g.branch_bits(b), n, axis=0)
        return
    yield np.zeros((n, k), dtype=np.int8)
    yield np.ones((n, k), dtype=np.int8)
    for _ in range(rounds):
        yield rng.integers(0, 2, (n, k)).astype(np.int8)


def verify_quasifunctional(g: QFLinkage, f: Expr | str | Callable | None = None, n: int = 1000,
                           seed: int = 0, tol: float = 1e-9, *, edge_tol: float = TAU_EXACT,
                           solver_fraction: float = 0.05, solver_tol: float = 1e-5,
                           sigma: float = 0.3, max_enum: int = 64, rounds: int = 8) -> VerificationReport:
    """Compare ``g``'s outputs with ``f`` on ``n`` seeded domain samples.

    Every branch is forward-placed when there are at most ``max_enum`` of
    them; otherwise the all-zero and all-one branches plus ``rounds`` fresh
    random branches per sample.  A further ``solver_fraction`` of the samples
    is re-solved by the generic solver with the inputs fixed, starting from a
    forward placement jittered by ``sigma`` times the domain scale; a
    converged solve whose outputs are off by more than
    ``solver_tol * max(1, |f|)`` fails the check.
    """
    ref = _reference(g, f)
    rng = np.random.default_rng(seed)
    zs = g.domain.sample(rng, n) if g.inputs else []
    want = ref(zs) if g.outputs else []
    margin = float(g.domain.margin(zs).min()) if g.inputs else math.inf
    max_err = max_res = 0.0
    all_ok = True
    tested = set()
    for bits in _branch_sets(g, n, rng, max_enum, rounds):
        res = g.place(zs, bits)
        all_ok &= bool(res.ok.all())
        okm = res.ok
        tested.update(int(x) for x in np.unique(bits @ (1 << np.arange(g.n_choices))))
        if okm.any():
            max_res = max(max_res, float(edge_residuals(g.linkage, res.positions)[okm].max()))
            for v, w in zip(g.outputs, want):
                max_err = max(max_err, float(np.abs(res.positions[v] - w)[okm].max()))
    if g.n_choices == 0:
        tested = {0}

    checks = conv = 0
    s_err = 0.0
    solver_ok = True
    if solver_fraction > 0 and g.inputs:
        m = max(1, int(math.ceil(solver_fraction * n)))
        size = g.domain.polyradius
        if size is None or not math.isfinite(size):
            size = float(np.median([e.length for e in g.linkage.edges]))
        scale = sigma * size
        cp = _Compiled(g.linkage, {})
        for i in rng.choice(n, size=min(m, n), replace=False):
            inputs = [z[i] for z in zs]
            fixed = {v: complex(z) for v, z in zip(g.inputs, inputs)}
            bits = rng.integers(0, 2, (1, g.n_choices)).astype(np.int8)
            pl = g.place([np.array([z]) for z in inputs], bits)
            if not pl.ok[0]:
                continue
            guess = {v: complex(p[0]) + scale * complex(*rng.normal(size=2)) for v, p in pl.positions.items()}
            guess.update(fixed)
            cpf = cp if not fixed else _Compiled(g.linkage, fixed)
            r = solve(SolveProblem(g.linkage, fixed, "warm", guess), int(rng.integers(2**32)), _compiled=cpf)
            checks += 1
            if not r.converged:
                continue
            conv += 1
            for v, w in zip(g.outputs, want):
                e = abs(r.realization[v] - complex(w[i]))
                s_err = max(s_err, e)
                if e > solver_tol * max(1.0, abs(complex(w[i]))):
                    solver_ok = False
    props = {
        "placement": all_ok,
        "function": max_err < tol,
        "edges": max_res < edge_tol,
        "solver": solver_ok,
    }
    return VerificationReport(g.kind, n, max_err, max_res, margin, len(tested), g.n_branches, checks, conv,
                              s_err, tol, props, seed)


# ---------------------------------------------------------------------------
# Point clouds


@dataclass
class PointCloud:
    """Sampled points of a semiconfiguration space, one row per realization."""

    markers: tuple[str, ...]
    points: np.ndarray  # (n, k) complex
    realizations: list[Realization] = field(default_factory=list)
    seed: int = 0
    restarts: int = 0
    stats: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(tuple(p) for p in self.points)

    @property
    def k(self) -> int:
        return len(self.markers)

    def validate(self, linkage: Linkage, tol: float = TAU_SOLVE) -> bool:
        """Re-check every stored realization and its marker row against ``linkage``."""
        if len(self.realizations) != len(self.points):
            return False
        for r, p in zip(self.realizations, self.points):
            if not r.is_realization(linkage, tol):
                return False
            if np.abs(np.array(r.restrict(self.markers)) - p).max(initial=0.0) > 0:
                return False
        return True

    def real_coords(self) -> np.ndarray:
        return _real(self.points)

    def to_dict(self) -> dict:
        return {
            "markers": list(self.markers),
            "points": [[[z.real, z.imag] for z in row] for row in self.points],
            "seed": self.seed, "restarts": self.restarts, "stats": dict(self.stats),
        }


def _real(points: np.ndarray) -> np.ndarray:
    p = np.asarray(points)
    if p.ndim == 1:
        p = p[:, None]
    if p.dtype.kind == "c":
        return np.concatenate([p.real, p.imag], axis=1)
    return p.astype(float)


def sample_semiconfiguration(l, W: Sequence[str] | None = None, n: int = 500, seed: int = 0, *,
                             fixed: Mapping | None = None, init=None, radius: float | None = None,
                             dedup: float | None = DEDUP_RES, max_iter: int | None = None) -> PointCloud:
    """Marker restriction of :func:`~semiconf.solver.sample_configurations`.

    ``l`` may be a linkage or a ``(linkage, markers)`` pair such as the result
    of :func:`~semiconf.compiler.linkage_for_zero_set`, whose seeder is then
    used unless ``init`` is given.
    """
    if not isinstance(l, Linkage):
        seeder = getattr(l, "seeder", None)
        l, w0 = l
        W = W if W is not None else tuple(w0)
        if init is None and seeder is not None:
            init = seeder
    if W is None:
        raise ValueError("marker set W is required")
    W = MarkerSet(tuple(W)).check(l).vertices
    stats: dict = {}
    kw = {} if max_iter is None else {"max_iter": max_iter}
    reals = sample_configurations(l, n, seed, fixed=fixed, init=init, radius=radius, dedup=None, stats=stats, **kw)
    pts = np.array([r.restrict(W) for r in reals], dtype=complex).reshape(len(reals), len(W))
    if dedup and len(pts):
        from .solver import dedup_indices

        keep = dedup_indices(pts, dedup)
        pts = pts[keep]
        reals = [reals[i] for i in keep]
    return PointCloud(W, pts, reals, seed, n, stats)


def slice_last_zero(cloud):
    """Translate every point so its last coordinate is 0.

    Accepts a :class:`PointCloud` (returns one) or an ``(n, k)`` complex array.
    """
    if isinstance(cloud, PointCloud):
        if cloud.k == 0:
            raise ValueError("cannot slice a cloud with no coordinates")
        pts = slice_last_zero(cloud.points)
        reals = [r.moved(EuclideanMotion.translation(-r[cloud.markers[-1]])) for r in cloud.realizations]
        return PointCloud(cloud.markers, pts, reals, cloud.seed, cloud.restarts, dict(cloud.stats))
    z = np.atleast_2d(np.asarray(cloud, dtype=complex))
    if z.shape[1] == 0:
        raise ValueError("cannot slice points with no coordinates")
    return z - z[:, -1:]


def one_sided_hausdorff(a, b) -> float:
    """``max_{p in a} min_{q in b} |p - q|`` over complex rows (as real vectors)."""
    A, B = _real(a), _real(b)
    if len(A) == 0:
        return 0.0
    if len(B) == 0:
        return math.inf
    d, _ = cKDTree(B).query(A)
    return float(d.max())


def hausdorff(a, b) -> float:
    return max(one_sided_hausdorff(a, b), one_sided_hausdorff(b, a))


def product_cloud(a, b) -> np.ndarray:
    """All concatenations ``(p, q)`` of rows of ``a`` and ``b``."""
    A = np.atleast_2d(np.asarray(a, dtype=complex))
    B = np.atleast_2d(np.asarray(b, dtype=complex))
    return np.concatenate([np.repeat(A, len(B), axis=0), np.tile(B, (len(A), 1))], axis=1)


# ---------------------------------------------------------------------------
# Symmetry and compactness


@dataclass
class InvarianceReport:
    m: int
    group: str
    realizations: int
    motions: int
    max_residual: float
    base_residual: float
    control: bool | None  # a motion outside the group was detected as breaking a pin
    tol: float

    @property
    def passed(self) -> bool:
        return self.realizations > 0 and self.max_residual <= self.base_residual + self.tol and self.control is not False

    def __bool__(self):
        return self.passed

    def to_dict(self) -> dict:
        return {"m": self.m, "group": self.group, "passed": self.passed, "realizations": self.realizations,
                "motions": self.motions, "max_residual": self.max_residual, "base_residual": self.base_residual,
                "control": self.control, "tol": self.tol}


def _random_rotation(rng, center=0j) -> EuclideanMotion:
    return EuclideanMotion.rotation(rng.uniform(0, 2 * math.pi), center)


def _random_shift(rng) -> complex:
    r = MOTION_RADIUS * math.sqrt(rng.uniform())
    return r * complex(math.cos(a := rng.uniform(0, 2 * math.pi)), math.sin(a))


def symmetry_motions(linkage: Linkage, rng: np.random.Generator, k: int) -> tuple[str, list[EuclideanMotion]]:
    """``k`` random motions from the group that should preserve the configuration space.

    No pins: all of Euc(2).  One pin: O(2) about it.  Two pins: the reflection
    across their line.  More: the identity only.
    """
    pins = list(dict.fromkeys(complex(z) for z in linkage.pinned.values()))
    out = []
    if len(pins) == 0:
        for i in range(k):
            g = EuclideanMotion(complex(np.exp(1j * rng.uniform(0, 2 * math.pi))), _random_shift(rng), bool(i % 2))
            out.append(g)
        return "Euc(2)", out
    if len(pins) == 1:
        c = pins[0]
        for i in range(k):
            if i % 2:
                a = rng.uniform(0, 2 * math.pi)
                out.append(EuclideanMotion.reflection(c, c + complex(math.cos(a), math.sin(a))))
            else:
                out.append(_random_rotation(rng, c))
        return "O(2)", out
    if len(pins) == 2:
        return "Z/2", [EuclideanMotion.reflection(pins[0], pins[1])]
    return "trivial", [EuclideanMotion()]


def check_invariance(l: Linkage, n: int = 20, seed: int = 0, *, realizations: Sequence[Realization] | None = None,
                     motions: int = 8, tol: float = 1e-9) -> InvarianceReport:
    """Apply the expected symmetry group to sampled realizations and re-check them.

    The group is chosen from the number ``m`` of distinct pin images (see
    :func:`symmetry_motions`).  Each moved realization must satisfy the edge
    and pin constraints as well as the original did, within ``tol``.  As a
    control for ``m >= 1`` a random translation must break a pin.
    """
    rng = np.random.default_rng(seed)
    if realizations is None:
        realizations = sample_configurations(l, n, seed, dedup=None)
    group, gs = symmetry_motions(l, rng, motions)
    m = len({complex(z) for z in l.pinned.values()})
    base = max((r.max_residual(l) for r in realizations), default=0.0)
    worst = 0.0
    for r in realizations:
        for g in gs:
            worst = max(worst, r.moved(g).max_residual(l))
    control = None
    if m >= 1 and realizations:
        t = EuclideanMotion.translation(1.0 + _random_shift(rng))
        control = realizations[0].moved(t).max_residual(l) > 1e-3
    return InvarianceReport(m, group, len(realizations), len(gs), worst, base, control, tol)


@dataclass
class CompactnessReport:
    precondition: bool
    message: str
    d: float
    max_radius: float
    points: int

    @property
    def passed(self) -> bool:
        return self.precondition and self.max_radius <= self.d + TAU_SOLVE

    def __bool__(self):
        return self.passed

    def to_dict(self) -> dict:
        return {"passed": self.passed, "precondition": self.precondition, "message": self.message,
                "d": self.d, "max_radius": self.max_radius, "points": self.points}


def check_compactness(l: Linkage, cloud: PointCloud | Sequence[Realization]) -> CompactnessReport:
    """Every sampled vertex lies within the total edge length ``d`` of a pin.

    Uses the realizations behind a :class:`PointCloud` when present, else
    its marker coordinates.
    """
    d = l.total_length
    if not l.pinned:
        return CompactnessReport(False, "linkage has no pinned vertex", d, math.inf, 0)
    if not l.is_connected():
        return CompactnessReport(False, "linkage is not connected", d, math.inf, 0)
    z0 = next(iter(l.pinned.values()))
    if isinstance(cloud, PointCloud):
        if cloud.realizations:
            pts = np.concatenate([r.as_array(l.vertices) for r in cloud.realizations])
        else:
            pts = cloud.points.ravel()
    else:
        pts = np.concatenate([r.as_array(l.vertices) for r in cloud]) if len(cloud) else np.zeros(0, complex)
    r = float(np.abs(pts - z0).max(initial=0.0))
    return CompactnessReport(True, "ok", d, r, int(pts.size))


# ---------------------------------------------------------------------------
# Brute force


def four_bar_grid(l: Linkage, resolution: float = 1e-3) -> tuple[tuple[str, str], np.ndarray]:
    """Configuration space of a four-bar by a scan over both crank angles.

    The two free vertices ``b`` and ``c`` each hang on a pin; on a grid of
    spacing ``resolution`` in both angles, every sign change of
    ``|b - c| - l(bc)`` along the second angle is located by linear
    interpolation.  Returns the free vertex names and an ``(n, 2)`` array.
    """
    free = [v for v in l.vertices if v not in l.pinned]
    if len(free) != 2 or len(l.edges) != 3 or not l.has_edge(*free):
        raise LinkageError("expected two pins and two free vertices joined by one edge each plus a coupler")
    cranks = []
    for v in free:
        (e,) = [e for e in l.edges if v in (e.u, e.v) and e.other(v) in l.pinned]
        cranks.append((l.pinned[e.other(v)], e.length))
    L = l.edge(*free).length
    n = int(math.ceil(2 * math.pi / resolution))
    th = np.linspace(0, 2 * math.pi, n, endpoint=False)
    (p1, r1), (p2, r2) = cranks
    B = p1 + r1 * np.exp(1j * th)
    Cr = p2 + r2 * np.exp(1j * np.append(th, 2 * math.pi))
    out = []
    for b in B:
        f = np.abs(b - Cr) - L
        s = np.flatnonzero(np.signbit(f[:-1]) != np.signbit(f[1:]))
        for i in s:
            w = f[i] / (f[i] - f[i + 1])
            t = th[i] + w * (2 * math.pi / n) if i < n - 1 else th[i] + w * (2 * math.pi - th[i])
            out.append((b, p2 + r2 * np.exp(1j * t)))
    return (free[0], free[1]), np.array(out, dtype=complex).reshape(-1, 2)


__all__ = [
    "CompactnessReport", "InvarianceReport", "PointCloud", "VerificationReport", "check_compactness",
    "check_invariance", "four_bar_grid", "hausdorff", "one_sided_hausdorff", "product_cloud",
    "sample_semiconfiguration", "slice_last_zero", "symmetry_motions", "verify_quasifunctional",
]
