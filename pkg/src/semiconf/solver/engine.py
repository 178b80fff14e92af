"""Realization finding for arbitrary linkages.

Unknowns are the coordinates of the vertices that are neither pinned nor
fixed by the caller.  They are ordered by reverse Cuthill-McKee so that the
Gauss-Newton normal matrix is banded; the hot loop lives in the kernel
selected by :mod:`semiconf.solver`.
"""
from __future__ import annotations

import copy
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import reverse_cuthill_mckee
from scipy.spatial import cKDTree

from ..core import TAU_SOLVE, Linkage, LinkageError, PinConflict, Realization, VertexId

LAM0 = 1e-3
MAX_ITER = 200
DEDUP_RES = 1e-4
TOL_REL = 1e-19
# a stall below this squared-residual level still counts as converged
SOFT_TOL_REL = 1e-14
# dense Gauss-Newton polish after the banded solve; skipped above this many unknowns
POLISH_MAX_VARS = 400
POLISH_STEPS = 30
# kernel results with a max squared residual below this (relative) are polished
POLISH_FROM_REL = 1e-6
# singular values below this fraction of the largest are treated as gauge or slack directions
POLISH_RCOND = 1e-10
# trace retries: warm-start perturbations, relative to the longest bar
TRACE_KICKS = (0.0, 1e-3, 1e-3, 1e-2, 1e-2, 3e-2, 3e-2)

Seeder = Callable[[np.random.Generator], Mapping[VertexId, complex]]


@dataclass(frozen=True)
class SolveResult:
    status: str  # "converged" | "infeasible" | "max-iterations"
    realization: Realization | None
    residual: float  # max |distance - length| over edges
    iterations: int

    @property
    def converged(self) -> bool:
        return self.status == "converged"


@dataclass
class SolveProblem:
    """A linkage plus extra fixed vertices and an initial-guess policy.

    ``init`` is ``"random"`` (uniform in a disk of radius ``radius``,
    default the total edge length, around the centroid of the fixed
    points), ``"seeded"`` (``guess`` is a callable ``rng -> positions``) or
    ``"warm"`` (``guess`` is a Realization or a position mapping).
    """

    linkage: Linkage
    fixed: Mapping[VertexId, complex] = field(default_factory=dict)
    init: str = "random"
    guess: object = None
    radius: float | None = None

    def __post_init__(self):
        if self.init not in ("random", "seeded", "warm"):
            raise ValueError(f"unknown init policy {self.init!r}")
        if self.init != "random" and self.guess is None:
            raise ValueError(f"init={self.init!r} needs a guess")
        for v, z in self.fixed.items():
            if v not in self.linkage:
                raise LinkageError(f"cannot fix unknown vertex {v!r}")
            p = self.linkage.pinned.get(v)
            if p is not None and abs(p - complex(z)) > 1e-12:
                raise PinConflict(f"fixed value for {v!r} disagrees with its pin")


def collinear_joints(linkage: Linkage, rel: float = 1e-12) -> dict[VertexId, tuple[VertexId, VertexId, float]]:
    """Vertices forced onto a segment by a degenerate triangle.

    If ``c`` is joined to ``u`` and ``v``, ``u-v`` is an edge and
    ``l(cu) + l(cv) = l(uv)``, then every realization has
    ``c = u + l(cu)/l(uv) * (v - u)``.
    """
    out = {}
    adj = linkage.adjacency
    emap = linkage.edge_map
    for c in linkage.vertices:
        nb = sorted(adj[c])
        for i, u in enumerate(nb):
            for v in nb[i + 1:]:
                e = emap.get((u, v) if u <= v else (v, u))
                if e is None:
                    continue
                lu, lv = linkage.edge(c, u).length, linkage.edge(c, v).length
                if abs(lu + lv - e.length) <= rel * e.length:
                    out[c] = (u, v, lu / e.length)
                    break
            if c in out:
                break
    return out


class _Compiled:
    """Index arrays for the kernel; depends only on the linkage and fixed set.

    Collinear joints (see :func:`collinear_joints`) are eliminated: their
    positions are affine combinations of the remaining *base* vertices and
    their two defining edges hold identically.  Without this the Jacobian is
    singular at every realization and Gauss-Newton only converges linearly,
    leaving joints off their bars by about the square root of the tolerance.
    """

    def __init__(self, linkage: Linkage, fixed: Mapping[VertexId, complex]):
        self.linkage = linkage
        self.names = list(linkage.vertices)
        index = linkage.index
        self.fixed = {**{v: complex(z) for v, z in linkage.pinned.items()},
                      **{v: complex(z) for v, z in fixed.items()}}
        # bars whose both ends are fixed: checked directly, never iterated on
        self.fixed_bars = [(e.u, e.v, e.length) for e in linkage.edges if e.u in self.fixed and e.v in self.fixed]
        dep: dict[VertexId, dict[VertexId, float]] = {}
        implied: set[tuple[VertexId, VertexId]] = set()

        def resolve(x):
            return dep.get(x, {x: 1.0})

        for c, (u, v, lam) in collinear_joints(linkage).items():
            if c in self.fixed:
                continue
            su, sv = resolve(u), resolve(v)
            if c in su or c in sv:
                continue
            comb: dict[VertexId, float] = {}
            for k, w in su.items():
                comb[k] = comb.get(k, 0.0) + (1 - lam) * w
            for k, w in sv.items():
                comb[k] = comb.get(k, 0.0) + lam * w
            for w, other in dep.items():
                if c in other:
                    f = other.pop(c)
                    for k, x in comb.items():
                        other[k] = other.get(k, 0.0) + f * x
            dep[c] = comb
            implied.add(linkage.edge(c, u).key)
            implied.add(linkage.edge(c, v).key)
        self.dependent = dep
        bases = [v for v in self.names if v not in dep]
        bindex = {v: i for i, v in enumerate(bases)}
        self.bases = bases
        B = len(bases)
        # vertex supports
        vptr, vidx, vcoef = [0], [], []
        for v in self.names:
            for k, w in resolve(v).items():
                vidx.append(bindex[k])
                vcoef.append(w)
            vptr.append(len(vidx))
        self.v_entry = np.repeat(np.arange(len(self.names)), np.diff(vptr))
        self.vidx = np.array(vidx, dtype=np.intp)
        self.vcoef = np.array(vcoef, dtype=float)
        # residual edges
        eptr, eidx, ecoef, len2 = [0], [], [], []
        for e in linkage.edges:
            if e.key in implied:
                continue
            comb = dict(resolve(e.u))
            for k, w in resolve(e.v).items():
                comb[k] = comb.get(k, 0.0) - w
            for k, w in comb.items():
                if abs(w) > 1e-15:
                    eidx.append(bindex[k])
                    ecoef.append(w)
            eptr.append(len(eidx))
            len2.append(e.length**2)
        self.eptr = np.array(eptr, dtype=np.int32)
        self.entry_edge = np.repeat(np.arange(len(eptr) - 1), np.diff(self.eptr))
        self.eidx = np.array(eidx, dtype=np.int32)
        self.ecoef = np.array(ecoef, dtype=float)
        self.len2 = np.array(len2, dtype=float)
        self.eu = np.array([index[e.u] for e in linkage.edges], dtype=np.intp)
        self.ev = np.array([index[e.v] for e in linkage.edges], dtype=np.intp)
        self.lengths = np.array([e.length for e in linkage.edges], dtype=float)
        # free bases, ordered by reverse Cuthill-McKee
        is_free = np.array([v not in self.fixed for v in bases], dtype=bool)
        free = np.flatnonzero(is_free)
        local = np.full(B, -1, dtype=np.int64)
        local[free] = np.arange(len(free))
        rows, cols = [], []
        for e in range(len(self.len2)):
            sup = local[self.eidx[self.eptr[e]:self.eptr[e + 1]]]
            sup = sup[sup >= 0]
            if len(sup) > 1:
                P, Q = np.meshgrid(sup, sup)
                rows.append(P.ravel())
                cols.append(Q.ravel())
        n_free = len(free)
        if n_free:
            r_ = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
            c_ = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
            adj = csr_matrix((np.ones(len(r_)), (r_, c_)), shape=(n_free, n_free))
            perm = reverse_cuthill_mckee(adj, symmetric_mode=True)
            rank = np.empty(n_free, dtype=np.int64)
            rank[perm] = np.arange(n_free)
            spread = int(np.abs(rank[r_] - rank[c_]).max()) if len(r_) else 0
        else:
            rank = np.zeros(0, dtype=np.int64)
            spread = 0
        slot = np.full(B, -1, dtype=np.int32)
        slot[free] = rank
        self.slot = slot
        self.nvar = 2 * n_free
        self.kd = min(2 * spread + 1, max(self.nvar - 1, 0))
        fixed_b = [bindex[v] for v in self.fixed if v in bindex]
        self.fixed_idx = np.array(fixed_b, dtype=np.intp)
        self.fixed_val = np.array([self.fixed[bases[i]] for i in fixed_b], dtype=complex)
        self.scale = max(1.0, float(self.len2.max()) if len(self.len2) else 1.0)
        self.total_length = float(self.lengths.sum())

    def with_fixed(self, values: Mapping[VertexId, complex]) -> "_Compiled":
        """Same structure with new values for already-fixed vertices."""
        if not set(values) <= set(self.fixed):
            raise LinkageError("with_fixed can only move vertices that are already fixed")
        new = copy.copy(self)
        new.fixed = {**self.fixed, **{v: complex(z) for v, z in values.items()}}
        new.fixed_val = np.array([new.fixed[self.bases[i]] for i in self.fixed_idx], dtype=complex)
        return new

    def base_from(self, guess: Mapping[VertexId, complex], rng: np.random.Generator,
                  radius: float | None) -> np.ndarray:
        y = self.random_base(rng, radius)
        for i, v in enumerate(self.bases):
            z = guess.get(v)
            if z is not None:
                z = complex(z)
                y[i] = (z.real, z.imag)
        return y

    def random_base(self, rng: np.random.Generator, radius: float | None) -> np.ndarray:
        B = len(self.bases)
        vals = list(self.fixed.values())
        center = np.mean(vals) if vals else 0j
        R = radius if radius is not None else max(self.total_length, 1.0)
        rho = R * np.sqrt(rng.random(B))
        th = 2 * np.pi * rng.random(B)
        y = np.empty((B, 2), dtype=np.longdouble)
        y[:, 0] = center.real + rho * np.cos(th)
        y[:, 1] = center.imag + rho * np.sin(th)
        return y

    def apply_fixed(self, y: np.ndarray) -> None:
        if len(self.fixed_idx):
            y[self.fixed_idx, 0] = self.fixed_val.real
            y[self.fixed_idx, 1] = self.fixed_val.imag

    def expand(self, y: np.ndarray) -> np.ndarray:
        """Complex positions of all vertices from base coordinates."""
        n = len(self.names)
        w = self.vcoef
        zx = np.zeros(n, dtype=np.longdouble)
        zy = np.zeros(n, dtype=np.longdouble)
        np.add.at(zx, self.v_entry, w * y[self.vidx, 0])
        np.add.at(zy, self.v_entry, w * y[self.vidx, 1])
        return zx.astype(float) + 1j * zy.astype(float)

    def distance_residual(self, z: np.ndarray) -> float:
        if not len(self.eu):
            return 0.0
        return float(np.abs(np.abs(z[self.eu] - z[self.ev]) - self.lengths).max())

    def realization(self, z: np.ndarray) -> Realization:
        return Realization(dict(zip(self.names, z.tolist())))


def _kernel():
    from . import _active_kernel

    return _active_kernel()


def _run(cp: _Compiled, y: np.ndarray, max_iter: int) -> SolveResult:
    cp.apply_fixed(y)
    clash = max((abs(abs(cp.fixed[u] - cp.fixed[v]) - ln) for u, v, ln in cp.fixed_bars), default=0.0)
    if clash >= TAU_SOLVE:
        return SolveResult("infeasible", None, clash, 0)
    tol = TOL_REL * cp.scale
    if cp.nvar == 0:
        # fully pinned: nothing to move, only check consistency
        status, it, maxr = 0, 0, 0.0
    else:
        status, it, maxr = _kernel().lm_solve(y, cp.slot, cp.eptr, cp.eidx, cp.ecoef, cp.len2, cp.nvar, cp.kd,
                                           max_iter, LAM0, tol, SOFT_TOL_REL * cp.scale)
    finite = bool(np.isfinite(y).all())
    # the banded kernel stalls near singular solutions; a dense polish on J
    # finishes those (and upgrades stalls that were already close)
    soft = SOFT_TOL_REL * cp.scale
    if finite and maxr > tol and maxr < POLISH_FROM_REL * cp.scale and 0 < cp.nvar <= POLISH_MAX_VARS:
        maxr = _polish(cp, y)
        if status != 0 and maxr < soft:
            status = 0
    z = cp.expand(y) if finite else None
    res = cp.distance_residual(z) if finite else math.inf
    if finite:
        # fixed vertices are exact in the base coordinates; dependents are exact combinations
        res = max(res, _pin_error(cp, z))
    if status == 0 and finite and res < TAU_SOLVE:
        return SolveResult("converged", cp.realization(z), res, it)
    name = "max-iterations" if status == 2 and finite else "infeasible"
    return SolveResult(name, None, res, it)


def _edge_terms(cp: _Compiled, y: np.ndarray):
    c = cp.ecoef.astype(np.longdouble)
    edge = cp.entry_edge
    dx = np.zeros(len(cp.len2), dtype=np.longdouble)
    dy = np.zeros(len(cp.len2), dtype=np.longdouble)
    np.add.at(dx, edge, c * y[cp.eidx, 0])
    np.add.at(dy, edge, c * y[cp.eidx, 1])
    return dx, dy, dx * dx + dy * dy - cp.len2.astype(np.longdouble)


def _polish(cp: _Compiled, y: np.ndarray) -> float:
    """Minimum-norm Gauss-Newton steps on the Jacobian itself.

    The banded kernel solves the normal equations, which square the
    condition number; at singular solutions (a braced parallelogram, a taut
    cable) that stalls with positions good to only ~1e-8.  Least squares on
    J keeps going until the long double residual bottoms out.
    """
    s = cp.slot[cp.eidx]
    free = s >= 0
    rows = cp.entry_edge[free]
    cols = 2 * s[free]
    coef = cp.ecoef[free]
    fb = np.flatnonzero(cp.slot >= 0)
    fs = cp.slot[fb]
    dx, dy, r = _edge_terms(cp, y)
    best = float(np.abs(r).max()) if len(r) else 0.0
    for _ in range(POLISH_STEPS):
        if best == 0.0:
            break
        J = np.zeros((len(r), cp.nvar))
        np.add.at(J, (rows, cols), 2.0 * dx[rows].astype(float) * coef)
        np.add.at(J, (rows, cols + 1), 2.0 * dy[rows].astype(float) * coef)
        delta = np.linalg.lstsq(J, -r.astype(float), rcond=POLISH_RCOND)[0]
        trial = y.copy()
        trial[fb, 0] += delta[2 * fs]
        trial[fb, 1] += delta[2 * fs + 1]
        tdx, tdy, tr = _edge_terms(cp, trial)
        m = float(np.abs(tr).max())
        if not m < best:
            break
        y[...] = trial
        dx, dy, r, best = tdx, tdy, tr, m
    return best


def _pin_error(cp: _Compiled, z: np.ndarray) -> float:
    if not cp.fixed:
        return 0.0
    idx = cp.linkage.index
    return max(abs(z[idx[v]] - w) for v, w in cp.fixed.items())


def _initial(cp: _Compiled, p: SolveProblem, rng: np.random.Generator) -> np.ndarray:
    if p.init == "random":
        return cp.random_base(rng, p.radius)
    if p.init == "seeded":
        guess = p.guess(rng)
    else:
        guess = p.guess.positions if isinstance(p.guess, Realization) else p.guess
    return cp.base_from(guess, rng, p.radius)


def solve(p: SolveProblem, seed: int | np.random.SeedSequence | None = 0, max_iter: int = MAX_ITER,
          _compiled: _Compiled | None = None) -> SolveResult:
    """One Levenberg-Marquardt solve; deterministic given ``seed``."""
    cp = _compiled or _Compiled(p.linkage, p.fixed)
    rng = np.random.default_rng(seed)
    return _run(cp, _initial(cp, p, rng), max_iter)


def solve_linkage(linkage: Linkage, fixed: Mapping[VertexId, complex] | None = None, seed=0,
                  guess=None, **kw) -> SolveResult:
    """Convenience wrapper: warm start from ``guess`` if given, else random."""
    init = "warm" if guess is not None else "random"
    return solve(SolveProblem(linkage, dict(fixed or {}), init, guess, kw.pop("radius", None)), seed, **kw)


# ---------------------------------------------------------------------------
# Sampling


def canonical_array(z: np.ndarray, eps: float = 1e-9) -> np.ndarray:
    """Quotient a configuration (complex array, rows = samples) by Euc(2).

    Translate entry 0 to the origin, rotate the first entry away from it onto
    the positive real axis and reflect the first entry off the real axis into
    the upper half-plane.
    """
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    out = z - z[:, :1]
    for row in out:
        nz = np.flatnonzero(np.abs(row) > eps)
        if len(nz):
            row *= np.conj(row[nz[0]]) / abs(row[nz[0]])
        off = np.flatnonzero(np.abs(row.imag) > eps)
        if len(off) and row[off[0]].imag < 0:
            row[:] = np.conj(row)
    return out


def dedup_indices(points: np.ndarray, res: float = DEDUP_RES) -> list[int]:
    """Indices of a greedy first-come subset with pairwise distance > ``res``."""
    points = np.asarray(points)
    if points.dtype.kind == "c":
        points = np.concatenate([points.real, points.imag], axis=1)
    if len(points) == 0:
        return []
    tree = cKDTree(points)
    keep, dead = [], np.zeros(len(points), dtype=bool)
    for i in range(len(points)):
        if dead[i]:
            continue
        keep.append(i)
        for j in tree.query_ball_point(points[i], res):
            dead[j] = True
    return keep


def dedup_realizations(linkage: Linkage, reals: Sequence[Realization], res: float = DEDUP_RES,
                       quotient: bool | None = None) -> list[Realization]:
    if not reals:
        return []
    names = list(linkage.vertices)
    z = np.array([r.as_array(names) for r in reals])
    if quotient is None:
        quotient = not linkage.pinned
    if quotient:
        z = canonical_array(z)
    return [reals[i] for i in dedup_indices(z, res)]


def sample_configurations(linkage: Linkage, n: int, seed: int = 0, *, fixed: Mapping | None = None,
                          init: Seeder | None = None, radius: float | None = None,
                          dedup: float | None = DEDUP_RES, max_iter: int = MAX_ITER,
                          until: Callable[[Realization], bool] | None = None,
                          stats: dict | None = None, workers: int = 1) -> list[Realization]:
    """``n`` random-restart solves; converged realizations, deduplicated.

    Restart ``k`` draws from the ``k``-th child of ``SeedSequence(seed)``, so
    results are reproducible and independent of ``n``.  ``init`` replaces
    the uniform random guess by a seeding callable.  With ``until``,
    sampling stops after the first realization satisfying it.  ``workers``
    threads solve restarts concurrently (the compiled kernel drops the GIL);
    results are merged in seed order, so they do not depend on ``workers``.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    fixed = dict(fixed or {})
    cp = _Compiled(linkage, fixed)
    prob = SolveProblem(linkage, fixed, "seeded" if init else "random", init, radius)
    children = np.random.SeedSequence(seed).spawn(n)
    found: list[Realization] = []
    counts = {"restarts": 0, "converged": 0, "infeasible": 0, "max-iterations": 0}
    def one(child):
        return solve(prob, child, max_iter, _compiled=cp)

    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        for r in (pool.map(one, children) if pool else map(one, children)):
            counts["restarts"] += 1
            counts[r.status] += 1
            if r.converged:
                found.append(r.realization)
                if until is not None and until(r.realization):
                    break
    finally:
        if pool:
            pool.shutdown(cancel_futures=True)
    if stats is not None:
        stats.update(counts)
    if dedup:
        found = dedup_realizations(linkage, found, dedup, quotient=not linkage.pinned and not fixed)
    return found


# ---------------------------------------------------------------------------
# Tracing


@dataclass
class TraceResult:
    s: np.ndarray  # path parameters reached, in [0, 1]
    points: np.ndarray  # (len(s), k) complex marker positions
    realizations: list[Realization]
    complete: bool

    def __len__(self):
        return len(self.s)

    def __iter__(self):
        return iter(tuple(p) for p in self.points)


def _as_path(path) -> Callable[[float], complex]:
    if callable(path):
        return path
    pts = np.asarray(path, dtype=complex)
    if pts.ndim != 1 or len(pts) < 2:
        raise ValueError("a path needs a callable or at least two points")
    t = np.linspace(0, 1, len(pts))

    def f(s):
        return complex(np.interp(s, t, pts.real) + 1j * np.interp(s, t, pts.imag))

    return f


def trace(linkage: Linkage, drive: VertexId, path, markers: Iterable[VertexId], steps: int = 256,
          start: Realization | Mapping | None = None, seed: int = 0, restarts: int = 50,
          min_step: float = 1e-6, max_iter: int = MAX_ITER) -> TraceResult:
    """Drive ``drive`` along ``path(s)``, ``s`` in ``[0, 1]``, recording markers.

    Continuation in the path parameter: every step warm-starts from the
    previous realization, and a failed step is retried at half the step
    length down to ``min_step``.  Stops with a partial trace when a step
    cannot be completed.  Marker values are recorded at the ``steps + 1``
    uniformly spaced parameters.
    """
    if drive not in linkage:
        raise LinkageError(f"no vertex {drive!r}")
    if drive in linkage.pinned:
        raise LinkageError(f"drive vertex {drive!r} is pinned")
    markers = list(markers)
    f = _as_path(path)
    cp0 = _Compiled(linkage, {drive: f(0.0)})

    first = None
    if start is not None:
        r = solve(SolveProblem(linkage, {drive: f(0.0)}, "warm", start), seed, max_iter, _compiled=cp0)
        first = r.realization if r.converged else None
    if first is None:
        for child in np.random.SeedSequence(seed).spawn(restarts):
            r = solve(SolveProblem(linkage, {drive: f(0.0)}), child, max_iter, _compiled=cp0)
            if r.converged:
                first = r.realization
                break
    if first is None:
        raise LinkageError("path start is infeasible for the drive vertex")

    grid = np.linspace(0.0, 1.0, steps + 1)
    s_done, pts, reals = [0.0], [first.restrict(markers)], [first]
    names = cp0.names
    rng = np.random.default_rng(seed)
    size = max(float(cp0.lengths.max(initial=1.0)), 1e-12)
    current = first
    z_cur = np.array([first.positions[v] for v in names])
    z_prev, s_prev = None, None
    s = 0.0
    h = 1.0 / steps
    k = 1
    complete = True
    while k <= steps:
        target = min(grid[k], s + h)
        cp = cp0.with_fixed({drive: f(target)})
        # secant predictor from the last two accepted points
        guess = z_cur
        if z_prev is not None and s > s_prev:
            guess = z_cur + (z_cur - z_prev) * ((target - s) / (s - s_prev))
        r = None
        for kick in TRACE_KICKS:
            if kick:
                # warm starts on a symmetric (singular) configuration can sit on a
                # saddle of the residual; a kick breaks the tie
                guess = z_cur + kick * size * (rng.normal(size=len(z_cur)) + 1j * rng.normal(size=len(z_cur)))
            r = _run(cp, cp.base_from(dict(zip(names, guess)), rng, None), max_iter)
            if r.converged and _continuous(current, r.realization, names, h, cp):
                break
            r = None
        if r is not None:
            z_prev, s_prev = z_cur, s
            current, s = r.realization, target
            z_cur = np.array([current.positions[v] for v in names])
            if abs(s - grid[k]) < 1e-15:
                s_done.append(s)
                pts.append(current.restrict(markers))
                reals.append(current)
                k += 1
                h = 1.0 / steps
            else:
                h = min(2 * h, 1.0 / steps)
            continue
        h /= 2
        if h < min_step:
            complete = False
            break
    return TraceResult(np.array(s_done), np.array(pts, dtype=complex).reshape(len(pts), len(markers)),
                       reals, complete)


def _continuous(a: Realization, b: Realization, names, h: float, cp: _Compiled) -> bool:
    """Reject jumps: no vertex may move more than a fixed fraction of the linkage size."""
    za = np.array([a.positions[v] for v in names])
    zb = np.array([b.positions[v] for v in names])
    return float(np.abs(za - zb).max()) <= 0.25 * max(float(cp.lengths.max(initial=1.0)), 1e-12)
