import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus import CORPUS
from strategies import exprs
from semiconf.compiler import (
    basic_semialgebraic_to_algebraic,
    check_margins,
    compile_expr,
    linkage_for_zero_set,
    realify,
)
from semiconf.core import LinkageError, splice, validate
from semiconf.expr import Var, evaluate, n_vars, parse
from semiconf.qf import edge_residuals, forward_place
from semiconf.solver import sample_configurations


def run(c, n=1000, seed=0):
    g = c.qf
    rng = np.random.default_rng(seed)
    zs = g.domain.sample(rng, n)
    bits = rng.integers(0, 2, (n, g.n_choices)).astype(np.int8)
    res = g.place(zs, bits)
    return zs, res


def assert_sound(c, tol=1e-8, n=1000):
    zs, res = run(c, n)
    assert res.ok.all()
    assert edge_residuals(c.linkage, res.positions).max() < 1e-9
    want = evaluate(c.expr, zs)
    assert np.abs(res.positions[c.output] - want).max() < tol


class TestCompile:
    def test_square(self):
        c = compile_expr("z^2")
        assert [e["kind"] for e in c.log] == ["squaring"]
        assert_sound(c, 1e-9)

    def test_abs2_is_real(self):
        c = compile_expr("z*conj(z)")
        zs, res = run(c)
        out = res.positions["out"]
        assert np.abs(out.imag).max() < 1e-9
        assert np.abs(out - np.abs(zs[0]) ** 2).max() < 1e-9

    def test_identity_distinct_io(self):
        c = compile_expr("z")
        assert c.output not in c.inputs
        assert_sound(c, 1e-9)

    def test_constant_output(self):
        c = compile_expr("2 + 1i", n_vars=1)
        assert abs(forward_place(c.qf, [0.3])["out"] - (2 + 1j)) < 1e-12

    @pytest.mark.parametrize("text", CORPUS)
    def test_corpus(self, text):
        c = compile_expr(text)
        assert not set(c.inputs) & set(c.qf.outputs)
        assert check_margins(c) == []
        assert validate(c.linkage).structurally_ok
        assert_sound(c, 1e-8, n=300)

    @pytest.mark.parametrize("radius", [0.5, 2.0])
    def test_radius(self, radius):
        assert_sound(compile_expr("z*w + conj(z)", radius=radius), 1e-8 * max(1, radius**2), n=300)

    @settings(max_examples=25, deadline=None)
    @given(exprs(n_vars=2, max_leaves=5))
    def test_random_expressions(self, e):
        n = max(n_vars(e), 1)
        c = compile_expr(e, n_vars=n)
        assert check_margins(c) == []
        zs, res = run(c, 100)
        assert res.ok.all()
        want = evaluate(e, zs)
        scale = max(1.0, float(np.abs(want).max()))
        assert np.abs(res.positions["out"] - want).max() < 1e-8 * scale

    def test_bad_args(self):
        with pytest.raises(ValueError):
            compile_expr("z", radius=0)
        with pytest.raises(ValueError):
            compile_expr("z*w", n_vars=1)

    def test_margin_log_static(self):
        c = compile_expr("z^4 - 2*z^2 + 1")
        assert all(e["need"] * 2 <= e["capacity"] * (1 + 1e-12) for e in c.log)
        c.log.append({"gadget": "fake", "need": 1.0, "capacity": 1.0})
        assert check_margins(c)

    def test_splice_composition(self):
        # f(u) = u^2 after g(z) = z/2 + 0.25
        g = compile_expr("0.5*z + 0.25")
        f = compile_expr("z^2")
        fg = compile_expr("(0.5*z + 0.25)^2")
        lk = splice(f.linkage, g.linkage, [("z1", g.output)], prefix="g")
        rng = np.random.default_rng(0)
        for _ in range(50):
            z = np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
            rg = forward_place(g.qf, [z], 0)
            rf = forward_place(f.qf, [rg[g.output]], 0)
            pos = {**{("z1" if v == g.output else f"g/{v}"): p for v, p in rg.positions.items()}, **rf.positions}
            assert max(edge_residuals(lk, {v: np.array([p]) for v, p in pos.items()})) < 1e-9
            assert abs(pos["out"] - forward_place(fg.qf, [z])["out"]) < 1e-8


class TestSemialgebraic:
    def test_nonneg(self):
        lift = basic_semialgebraic_to_algebraic([], [Var(0)], [], 1)
        assert lift.n_total == 2 and lift.slack_eq == [1]
        for x in (0.0, 0.7, 4.0):
            y = np.sqrt(x)
            assert abs(evaluate(lift.P, [np.array([x]), np.array([y])])[0]) < 1e-12
        # x < 0: (y^2 - x)^2 >= x^2 > 0 for every real y
        ys = np.linspace(-3, 3, 101)
        assert np.min(np.abs(evaluate(lift.P, [np.full(101, -0.5), ys]))) >= 0.25 - 1e-12

    def test_positive(self):
        lift = basic_semialgebraic_to_algebraic([], [], [Var(0)], 1)
        assert lift.slack_pos == [1]
        assert abs(evaluate(lift.P, [np.array([4.0]), np.array([0.5])])[0]) < 1e-12
        ws = np.linspace(-10, 10, 1001)
        assert np.min(np.abs(evaluate(lift.P, [np.zeros(1001), ws]))) == 1.0

    def test_empty(self):
        lift = basic_semialgebraic_to_algebraic([], [], [], 3)
        assert evaluate(lift.P, [np.array([1.0])] * 3)[0] == 0
        assert lift.projection == (0, 1, 2)

    def test_realify(self):
        P = realify(parse("z - 1"), 1)
        v = evaluate(P, [np.array([1.0 + 0j, 1 + 0.5j, 2.0 + 0j])])
        assert abs(v[0]) < 1e-15 and v[1].real > 0 and v[2].real > 0
        assert np.abs(v.imag).max() < 1e-15


class TestZeroSet:
    def test_circle(self):
        z = linkage_for_zero_set("z*conj(z) - 1", 2.0)
        rs = sample_configurations(z.linkage, 100, 0, init=z.seeder, dedup=None)
        assert len(rs) > 50
        assert max(abs(abs(r["z1"]) - 1) for r in rs) < 1e-6

    def test_origin(self):
        z = linkage_for_zero_set("z", 1.0)
        rs = sample_configurations(z.linkage, 50, 0, init=z.seeder)
        assert rs
        assert max(abs(r["z1"]) for r in rs) < 1e-6

    def test_diagonal(self):
        z = linkage_for_zero_set("z - w", 1.0)
        rs = sample_configurations(z.linkage, 60, 0, init=z.seeder, dedup=None)
        assert len(rs) > 30
        assert max(abs(r["z1"] - r["z2"]) for r in rs) < 1e-6
        assert np.ptp([r["z1"].real for r in rs]) > 0.5

    def test_project(self):
        z = linkage_for_zero_set("z*conj(z) - 1", 2.0)
        p = z.project([0.3 + 0.2j])
        assert p is not None and abs(abs(p[0]) - 1) < 1e-12

    def test_constant_rejected(self):
        with pytest.raises(LinkageError):
            linkage_for_zero_set("1", 1.0, n_vars=1)
