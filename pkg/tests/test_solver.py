import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import collinearity, four_bar, triangle
from semiconf import solver
from semiconf.core import LinkageBuilder, LinkageError, Realization
from semiconf.gadgets import (
    conjugation,
    identity_gadget,
    pantograph,
    peaucellier,
    squaring,
    straight_line,
    straight_line_drive,
)
from semiconf.qf import forward_place
from semiconf.solver import (
    SolveProblem,
    canonical_array,
    dedup_indices,
    sample_configurations,
    solve,
    solve_linkage,
    trace,
)


def winding(points, center=0j):
    a = np.unwrap(np.angle(np.asarray(points) - center))
    return (a[-1] - a[0]) / (2 * math.pi)


class TestSolve:
    def test_triangle(self):
        lk = triangle()
        seen = set()
        for s in range(20):
            r = solve(SolveProblem(lk, {"A": 0j, "B": 1 + 0j}), s)
            assert r.converged and r.residual < 1e-6
            c = r.realization["C"]
            assert abs(c.real - 0.5) < 1e-9 and abs(abs(c.imag) - math.sqrt(3) / 2) < 1e-9
            seen.add(c.imag > 0)
        assert seen == {True, False}

    def test_inconsistent_pins(self):
        lk = triangle({"A": 0j, "B": 3 + 0j})
        rs = [solve(SolveProblem(lk, {}), s) for s in range(10)]
        assert all(r.status == "infeasible" and r.realization is None for r in rs)

    def test_fixed_conflicts_with_pin(self):
        with pytest.raises(LinkageError):
            solve(SolveProblem(triangle({"A": 0j}), {"A": 1 + 0j}), 0)

    def test_peaucellier_fixed_input(self):
        g = peaucellier(5, 4, 3)
        ok = [r for r in (solve(SolveProblem(g.linkage, {"D": 2 + 1j}), s) for s in range(40)) if r.converged]
        assert ok
        for r in ok:
            assert abs(abs(r.realization["E"]) * abs(2 + 1j) - 9) < 1e-6

    def test_converged_residual_bound(self):
        for r in (solve(SolveProblem(four_bar(), {}), s) for s in range(50)):
            if r.converged:
                assert r.realization.max_residual(four_bar()) < 1e-6

    def test_deterministic(self):
        p = SolveProblem(peaucellier(5, 4, 3).linkage, {})
        a, b = solve(p, 7), solve(p, 7)
        assert a.status == b.status and a.iterations == b.iterations
        if a.converged:
            assert a.realization.positions == b.realization.positions

    def test_warm_start(self):
        g = identity_gadget()
        guess = forward_place(g, [1 + 1j]).positions
        r = solve_linkage(g.linkage, {"D": 1 + 1j}, guess=guess)
        assert r.converged and abs(r.realization["E"] - (1 + 1j)) < 1e-9

    def test_fully_pinned(self):
        lk = triangle({"A": 0j, "B": 1 + 0j, "C": 0.5 + 1j * math.sqrt(3) / 2})
        assert solve(SolveProblem(lk, {}), 0).converged

    @pytest.mark.skipif("cython" not in solver.available_backends(), reason="extension not built")
    def test_backends_agree(self):
        p = SolveProblem(peaucellier(5, 4, 3).linkage, {})
        try:
            out = {}
            for b in ("cython", "python"):
                solver.set_backend(b)
                out[b] = [solve(p, s) for s in range(20)]
        finally:
            solver.set_backend("cython")
        for a, b in zip(out["cython"], out["python"]):
            assert a.status == b.status
            if a.converged:
                ra, rb = a.realization, b.realization
                assert max(abs(ra[v] - rb[v]) for v in ra.positions) < 1e-9


class TestAgreement:
    GADGETS = [
        identity_gadget(), pantograph("average", 1.0), pantograph("scale_up", 1.0, 2.0),
        pantograph("scale_down", 1.0, 0.5), pantograph("negate", 1.0, 1.5), peaucellier(5, 4, 3),
        squaring(1.0), conjugation(1.0),
    ]

    @pytest.mark.parametrize("g", GADGETS, ids=lambda g: g.kind)
    def test_perturbed_placement_converges_back(self, g):
        rng = np.random.default_rng(3)
        zs = g.domain.sample(rng, 200)
        pr = g.domain.polyradius
        sigma = 1e-3 * (pr if pr and math.isfinite(pr) else 1.0)
        converged = 0
        for i in range(200):
            inputs = [z[i] for z in zs]
            r0 = forward_place(g, inputs, 0)
            guess = {v: z + sigma * complex(*rng.normal(size=2)) for v, z in r0.positions.items()}
            fixed = dict(zip(g.inputs, inputs))
            r = solve(SolveProblem(g.linkage, fixed, "warm", guess), i)
            if r.converged:
                converged += 1
                for o in g.outputs:
                    assert abs(r.realization[o] - r0[o]) < 1e-6
        # misses are near-singular inputs (e.g. a straight-line marker close to
        # its segment midpoint, where the inversor rhombus goes flat)
        assert converged >= 180


class TestSampling:
    def test_free_segment_one_class(self):
        b = LinkageBuilder()
        b.add_edge("u", "v", 1.0)
        rs = sample_configurations(b.build(), 50, 0)
        assert len(rs) == 1
        raw = sample_configurations(b.build(), 50, 0, dedup=None)
        z = np.array([[r["u"], r["v"]] for r in raw])
        c = canonical_array(z)
        assert np.abs(c - c[0]).max() < 1e-9
        assert np.ptp(z[:, 0].real) > 0.1

    def test_straight_line_marker(self):
        g = straight_line(1, 2)
        rs = sample_configurations(g.linkage, 200, 0, dedup=None)
        assert len(rs) > 20
        for r in rs:
            a = r["A"]
            assert abs(a.imag) < 1e-6 and 1 - 1e-6 <= a.real <= 2 + 1e-6

    def test_anchor_frame_single(self):
        from semiconf.core import add_anchor_frame

        assert len(sample_configurations(add_anchor_frame(identity_gadget().linkage), 30, 0)) >= 1

    def test_reproducible_and_prefix_stable(self):
        lk = four_bar()
        a = sample_configurations(lk, 40, 5, dedup=None)
        b = sample_configurations(lk, 80, 5, dedup=None)
        assert [r.positions for r in a] == [r.positions for r in b[: len(a)]]

    def test_workers_same_result(self):
        lk = peaucellier(5, 4, 3).linkage
        a = sample_configurations(lk, 60, 1, dedup=None)
        b = sample_configurations(lk, 60, 1, dedup=None, workers=3)
        assert [r.positions for r in a] == [r.positions for r in b]

    def test_until(self):
        stats = {}
        rs = sample_configurations(four_bar(), 500, 0, dedup=None, until=lambda r: True, stats=stats)
        assert len(rs) == 1 and stats["restarts"] < 500

    def test_n_positive(self):
        with pytest.raises(ValueError):
            sample_configurations(four_bar(), 0, 0)

    @settings(max_examples=30)
    @given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=1, max_size=40))
    def test_dedup_spacing(self, pts):
        p = np.array(pts)
        keep = dedup_indices(p, 0.5)
        q = p[keep]
        d = np.linalg.norm(q[:, None] - q[None], axis=-1) + np.eye(len(q)) * 10
        assert d.min() > 0.5
        # every dropped point is near a kept one
        for x in p:
            assert np.linalg.norm(q - x, axis=1).min() <= 0.5

    @settings(max_examples=30)
    @given(st.floats(0, 2 * math.pi), st.floats(-3, 3), st.floats(-3, 3), st.booleans())
    def test_canonical_invariant(self, th, x, y, refl):
        z = np.array([[0.2 + 0.1j, 1.3 - 0.4j, 0.5 + 0.9j]])
        w = z.conj() if refl else z
        w = w * complex(math.cos(th), math.sin(th)) + complex(x, y)
        assert np.abs(canonical_array(w) - canonical_array(z)).max() < 1e-9


class TestTrace:
    def test_identity_follows(self):
        g = identity_gadget()
        tr = trace(g.linkage, "D", lambda s: 2 * s + 1j * s * s, ["E"], steps=40)
        assert tr.complete
        want = 2 * tr.s + 1j * tr.s**2
        assert np.abs(tr.points[:, 0] - want).max() < 1e-9

    def test_peaucellier_arc_line(self):
        g = peaucellier(5, 4, 3)
        d = 1.5
        lo, hi = 1.2426406871192848, 7.242640687119285
        th0 = math.asin(lo**2 / (2 * d * d) - 1)
        # |D - d i| = d, kept inside the annulus
        path = lambda s: 1j * d + d * np.exp(1j * ((math.pi - th0 - 0.05) + s * (2 * th0 - math.pi + 0.1)))  # noqa: E731
        tr = trace(g.linkage, "D", path, ["E"], steps=128)
        assert tr.complete
        E = tr.points[:, 0]
        assert np.abs(E.imag - 9 / (2 * d)).max() < 1e-6
        assert np.ptp(E.real) > 1.0

    def test_squaring_winds_twice(self):
        g = squaring(1.0)
        start = forward_place(g, [1.0]).positions
        tr = trace(g.linkage, "z", lambda s: np.exp(2j * math.pi * s), ["out"], steps=128, start=start)
        assert tr.complete
        out = tr.points[:, 0]
        assert round(winding(out)) == 2
        assert np.abs(out - np.exp(4j * math.pi * tr.s)).max() < 1e-6

    def test_straight_line_drive(self):
        g = straight_line(0, 1)
        v, path = straight_line_drive(g)
        tr = trace(g.linkage, v, path, ["A"], steps=64)
        assert tr.complete
        assert np.abs(tr.points[:, 0].imag).max() < 1e-6

    def test_partial_trace_stops(self):
        g = pantograph("average", 1.0)
        lk = g.linkage
        from semiconf.core import pin

        lk = pin(lk, "A", 0j)
        tr = trace(lk, "C", lambda s: 6 * s + 0.1j, ["B"], steps=30)
        assert not tr.complete
        assert 0 < tr.s[-1] < 1
        assert np.abs(tr.points[:, 0] - (0.1j + 6 * tr.s) / 2).max() < 1e-6

    def test_errors(self):
        with pytest.raises(LinkageError):
            trace(four_bar(), "A", lambda s: s, ["B"])
        with pytest.raises(LinkageError):
            trace(four_bar(), "Z", lambda s: s, ["B"])
        with pytest.raises(LinkageError):
            trace(four_bar(), "B", lambda s: 5 + s, ["C"], restarts=5)
