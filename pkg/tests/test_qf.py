import numpy as np
import pytest

from semiconf.core import EuclideanMotion, LinkageError
from semiconf.gadgets import identity_gadget, pantograph, peaucellier, squaring
from semiconf.qf import (
    Annulus,
    Circuit,
    DegenerateError,
    Disk,
    InfeasibleError,
    Polydisk,
    Segment,
    edge_residuals,
    forward_place,
)


class TestDomains:
    def test_disk(self):
        d = Disk(2.0, 1j)
        assert d.contains([np.array([1j, 2 + 1j])]).all()
        assert not d.contains([np.array([3 + 1j])])[0]
        s = d.sample(np.random.default_rng(0), 500)[0]
        assert (np.abs(s - 1j) <= 2).all()
        assert d.polyradius == pytest.approx(1.0)

    def test_annulus(self):
        a = Annulus(1.0, 3.0)
        m = a.margin([np.array([0.5, 2.0, 4.0])])
        assert m[0] < 0 and m[1] > 0 and m[2] < 0
        assert a.polyradius is None

    def test_polydisk(self):
        p = Polydisk(1.0, 2)
        assert p.contains([np.array([0.5]), np.array([0.5j])])[0]
        assert not p.contains([np.array([0.5]), np.array([2.0])])[0]

    def test_segment(self):
        s = Segment(0j, 1 + 0j)
        z = s.sample(np.random.default_rng(1), 100)[0]
        assert np.abs(z.imag).max() == 0 and 0 <= z.real.min() and z.real.max() <= 1

    def test_to_dict(self):
        assert Disk(1.5).to_dict()["kind"] == "disk"


class TestPlacement:
    def test_branches(self):
        g = peaucellier(5, 4, 3)
        assert g.n_branches == 2**g.n_choices
        with pytest.raises(ValueError):
            g.branch_bits(g.n_branches)
        r0 = forward_place(g, [2 + 1j], 0)
        r1 = forward_place(g, [2 + 1j], g.n_branches - 1)
        assert r0["E"] == pytest.approx(r1["E"], abs=1e-12)
        assert r0.max_residual(g.linkage) < 1e-9

    def test_outside_domain(self):
        with pytest.raises(InfeasibleError):
            forward_place(squaring(1.0), [2.0])

    def test_nonstrict_outside_still_places_if_possible(self):
        r = forward_place(squaring(1.0), [1.001], strict=False)
        assert r[squaring(1.0).outputs[0]] == pytest.approx(1.001**2, abs=1e-9)

    def test_degenerate_flagged(self):
        with pytest.raises((InfeasibleError, DegenerateError)):
            forward_place(peaucellier(5, 4, 3), [0j], strict=False)

    def test_vectorized_matches_scalar(self):
        g = pantograph("average", 1.0)
        z = np.array([0.1 + 0.2j, -0.3j, 0.5])
        w = np.array([0.2, 0.1j, -0.5 + 0.1j])
        res = g.place([z, w])
        assert res.ok.all()
        out = res.positions[g.outputs[0]]
        for i in range(3):
            r = forward_place(g, [z[i], w[i]])
            assert r[g.outputs[0]] == pytest.approx(out[i], abs=1e-15)
        assert edge_residuals(g.linkage, res.positions).max() < 1e-12

    def test_evaluate(self):
        assert squaring(1.0).evaluate([0.5j])[0][0] == pytest.approx(-0.25)


class TestMoved:
    def test_conjugated_map(self):
        g = squaring(1.0)
        m = EuclideanMotion.translation(3 + 1j)
        h = g.moved(m, 2.0)
        z = 3 + 1j + 0.6
        r = forward_place(h, [z])
        expect = h.evaluate([z])[0][0]
        assert r[h.outputs[0]] == pytest.approx(expect, abs=1e-9)
        assert r.max_residual(h.linkage) < 1e-9
        # rescale by k then move: f_h(z) = g(k f((g^-1 z)/k))
        assert expect == pytest.approx(3 + 1j + 2 * (0.3**2), abs=1e-12)


class TestCircuit:
    def test_compose_squarings(self):
        c = Circuit(["z"])
        (y,) = c.add(squaring(1.0), ["z"], "s1")
        (w,) = c.add(squaring(1.0), [y], "s2")
        g = c.build([w], Disk(1.0), "fourth", func=lambda zs: [zs[0] ** 4])
        r = forward_place(g, [0.7 + 0.2j])
        assert r[w] == pytest.approx((0.7 + 0.2j) ** 4, abs=1e-9)
        assert r.max_residual(g.linkage) < 1e-9
        assert [e["kind"] for e in c.log] == ["squaring", "squaring"]

    def test_pins_shared(self):
        c = Circuit(["z"])
        c.add(squaring(1.0), ["z"], "a")
        c.add(squaring(1.0), ["z"], "b")
        g = c.build([], Disk(1.0), "x")
        # both inversors pivot at 0; one shared pinned vertex there
        assert sum(1 for z in g.linkage.pinned.values() if z == 0) == 1

    def test_arity_errors(self):
        c = Circuit(["z", "w"])
        with pytest.raises(LinkageError):
            c.add(pantograph("average", 1.0), ["z"], "p")
        with pytest.raises(LinkageError):
            c.add(pantograph("average", 1.0), ["z", "z"], "p")

    def test_name_clash(self):
        c = Circuit(["z"])
        c.add(identity_gadget(), ["z"], "p")
        with pytest.raises(LinkageError):
            c.add(identity_gadget(), ["z"], "p")
