import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import four_bar, triangle
from semiconf.analysis import (
    MOTION_RADIUS,
    PointCloud,
    check_compactness,
    check_invariance,
    four_bar_grid,
    hausdorff,
    one_sided_hausdorff,
    product_cloud,
    sample_semiconfiguration,
    slice_last_zero,
    symmetry_motions,
    verify_quasifunctional,
)
from semiconf.core import Linkage, LinkageBuilder, LinkageError, disjoint_union, pin, unpin, without_edges
from semiconf.gadgets import (
    example_one_linkage,
    identity_gadget,
    pantograph,
    peaucellier,
    squaring,
    straight_line,
)
from semiconf.qf import QFLinkage


def bar(length=1.0):
    b = LinkageBuilder()
    b.add_edge("u", "v", length)
    return b.build()


class TestVerify:
    def test_squaring_passes(self):
        rep = verify_quasifunctional(squaring(1.0), "z^2", n=1000)
        assert rep.passed and rep.max_error < 1e-9
        assert rep.min_margin > 0
        assert set(rep.properties) == {"placement", "function", "edges", "solver"}

    def test_identity(self):
        rep = verify_quasifunctional(identity_gadget(), "z", n=500)
        assert rep.passed and rep.branches_tested == 2 and rep.branch_coverage == 1.0

    def test_wrong_function_fails(self):
        rep = verify_quasifunctional(squaring(1.0), "z^3", n=200)
        assert not rep.passed and not rep.properties["function"]

    def test_unbraced_squaring_fails(self):
        g = squaring(1.0)
        ub = QFLinkage(without_edges(g.linkage, "brace"), g.inputs, g.outputs, g.domain, g.placement, "unbraced")
        rep = verify_quasifunctional(ub, "z^2", n=1000, seed=0, solver_fraction=0.1)
        assert not rep.passed
        assert rep.properties["function"] and not rep.properties["solver"]

    def test_report_round_trip(self):
        import json

        rep = verify_quasifunctional(pantograph("average", 1.0), "0.5*(z+w)", n=100)
        d = json.loads(json.dumps(rep.to_dict()))
        assert d["passed"] is True and d["samples"] == 100
        assert "pass" in rep.summary().lower()

    def test_callable_reference(self):
        rep = verify_quasifunctional(pantograph("negate", 1.0, 2.0), lambda zs: [-2 * zs[0]], n=200)
        assert rep.passed

    def test_deterministic(self):
        a = verify_quasifunctional(peaucellier(5, 4, 3), n=200, seed=4).to_dict()
        b = verify_quasifunctional(peaucellier(5, 4, 3), n=200, seed=4).to_dict()
        assert a == b


class TestClouds:
    def test_diagonal(self):
        c = sample_semiconfiguration(example_one_linkage(), ["D", "E"], 200, 0)
        assert len(c) > 1
        assert np.abs(c.points[:, 0] - c.points[:, 1]).max() < 1e-9
        assert c.validate(example_one_linkage())

    def test_straight_line_segment(self):
        g = straight_line(0, 1)
        c = sample_semiconfiguration(g.linkage, ["A"], 300, 0)
        a = c.points[:, 0]
        assert np.abs(a.imag).max() < 1e-6
        assert a.real.min() > -1e-6 and a.real.max() < 1 + 1e-6
        assert np.ptp(a.real) > 0.5

    def test_pair_requires_markers(self):
        with pytest.raises(ValueError):
            sample_semiconfiguration(bar(), None, 5)
        with pytest.raises(LinkageError):
            sample_semiconfiguration(bar(), ["x"], 5)

    def test_product(self):
        l1 = pin(bar(), "u", 0j)
        l2 = pin(bar(2.0), "u", 5 + 0j)
        u = disjoint_union(l1, l2)
        cu = sample_semiconfiguration(u, ["0/v", "1/v"], 3000, 1, dedup=None)
        # every union point lies on the product of two circles
        assert np.abs(np.abs(cu.points[:, 0]) - 1).max() < 1e-9
        assert np.abs(np.abs(cu.points[:, 1] - 5) - 2).max() < 1e-9
        c1 = sample_semiconfiguration(l1, ["v"], 60, 2, dedup=None)
        c2 = sample_semiconfiguration(l2, ["v"], 60, 3, dedup=None)
        assert product_cloud(c1.points, c2.points).shape == (3600, 2)
        # union samples sit on a dense parametric grid of the torus
        t = np.exp(2j * np.pi * np.arange(64) / 64)[:, None]
        grid = product_cloud(t, 5 + 2 * t)
        assert one_sided_hausdorff(cu.points, grid) < 0.15

    def test_to_dict(self):
        c = sample_semiconfiguration(four_bar(), ["B", "C"], 20, 0)
        d = c.to_dict()
        assert d["markers"] == ["B", "C"] and len(d["points"]) == len(c)


class TestSlice:
    def test_diagonal_to_origin(self):
        z = np.array([[1 + 1j, 1 + 1j], [2, 2], [-1j, -1j]])
        assert np.abs(slice_last_zero(z)).max() == 0

    def test_example_linkage_vs_pinned(self):
        lk = example_one_linkage()
        c = sample_semiconfiguration(lk, ["D", "E"], 100, 0)
        s = slice_last_zero(c)
        pinned = sample_semiconfiguration(pin(lk, "E", 0j), ["D", "E"], 100, 0)
        assert np.abs(s.points).max() < 1e-9 and np.abs(pinned.points).max() < 1e-6

    @given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5)),
                    min_size=1, max_size=20))
    def test_idempotent(self, rows):
        z = np.array([[complex(a, b), complex(c, d)] for a, b, c, d in rows])
        once = slice_last_zero(z)
        assert np.array_equal(slice_last_zero(once), once)
        assert np.all(once[:, -1] == 0)

    def test_sliced_matches_pinned_up_to_o2(self):
        from semiconf.solver import canonical_array

        lk = four_bar()
        free = unpin(unpin(lk, "A"), "D")
        cs = slice_last_zero(sample_semiconfiguration(free, ["B", "C", "D", "A"], 400, 0, dedup=None))
        cp = sample_semiconfiguration(pin(free, "A", 0j), ["B", "C", "D", "A"], 400, 0, dedup=None)
        a = canonical_array(cs.points[:, ::-1])
        b = canonical_array(cp.points[:, ::-1])
        assert a.shape[0] > 50 and b.shape[0] > 50
        assert np.abs(np.abs(cs.points[:, 3])).max() == 0


class TestInvariance:
    def test_unpinned_peaucellier(self):
        lk = unpin(peaucellier(5, 4, 3).linkage, "A")
        rep = check_invariance(lk, 10, 0)
        assert rep.group == "Euc(2)" and rep.passed and rep.max_residual < 1e-9

    def test_one_pin(self):
        rep = check_invariance(unpin(four_bar(), "D"), 10, 0)
        assert rep.m == 1 and rep.group == "O(2)" and rep.passed and rep.control

    def test_two_pins(self):
        rep = check_invariance(four_bar(), 10, 0)
        assert rep.m == 2 and rep.group == "Z/2" and rep.passed

    def test_translation_breaks_pin(self):
        lk = unpin(four_bar(), "D")
        rng = np.random.default_rng(0)
        from semiconf.core import EuclideanMotion
        from semiconf.solver import sample_configurations

        r = sample_configurations(lk, 5, 0)[0]
        assert r.moved(EuclideanMotion.translation(3.0)).max_residual(lk) > 1
        _, gs = symmetry_motions(lk, rng, 6)
        assert all(abs(g(0j)) < 1e-12 for g in gs)

    def test_motion_radius(self):
        _, gs = symmetry_motions(bar(), np.random.default_rng(0), 200)
        shifts = np.array([g.shift for g in gs])
        assert np.abs(shifts).max() <= MOTION_RADIUS


class TestCompactness:
    def test_straight_line(self):
        lk = straight_line(0, 1).linkage
        c = sample_semiconfiguration(lk, ["A"], 100, 0)
        rep = check_compactness(lk, c)
        assert rep.passed and rep.max_radius <= rep.d

    def test_single_pin(self):
        lk = Linkage(("p",), (), {"p": 1 + 1j})
        from semiconf.solver import sample_configurations

        rep = check_compactness(lk, sample_configurations(lk, 3, 0))
        assert rep.passed and rep.max_radius == 0

    def test_unpinned(self):
        rep = check_compactness(bar(), [])
        assert not rep.precondition and not rep.passed
        assert "pinned" in rep.message

    def test_disconnected(self):
        lk = Linkage(("p", "q"), (), {"p": 0j})
        assert "connected" in check_compactness(lk, []).message


class TestBruteForce:
    def test_grid_on_constraint(self):
        (b, c), pts = four_bar_grid(four_bar(), 1e-2)
        assert len(pts) > 100
        assert np.abs(np.abs(pts[:, 0]) - 0.3).max() < 1e-12
        assert np.abs(np.abs(pts[:, 1] - 1) - 0.6).max() < 1e-12
        assert np.abs(np.abs(pts[:, 0] - pts[:, 1]) - 0.9).max() < 1e-3

    def test_hausdorff_basic(self):
        a = np.array([[0j], [1 + 0j]])
        b = np.array([[0j]])
        assert one_sided_hausdorff(b, a) == 0 and one_sided_hausdorff(a, b) == 1
        assert hausdorff(a, b) == 1
        assert one_sided_hausdorff(np.zeros((0, 1), complex), a) == 0

    def test_wrong_shape(self):
        with pytest.raises(LinkageError):
            four_bar_grid(triangle())
