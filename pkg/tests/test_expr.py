import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strategies import exprs
from semiconf.expr import (
    Conj,
    Const,
    Mul,
    ParseError,
    Square,
    Var,
    degree,
    evaluate,
    magnitude_bounds,
    n_vars,
    parse,
    postorder,
    simplify,
    to_string,
)


def points(rng, n, k=64, radius=1.0):
    r = radius * np.sqrt(rng.random((n, k)))
    return list(r * np.exp(2j * np.pi * rng.random((n, k))))


class TestParse:
    def test_cli_syntax(self):
        e = parse("z1^2 + 2*conj(z2) - (0.5+1i)")
        z = [np.array([1 + 1j]), np.array([2 - 1j])]
        assert abs(evaluate(e, z)[0] - ((1 + 1j) ** 2 + 2 * (2 + 1j) - (0.5 + 1j))) < 1e-15
        assert n_vars(e) == 2 and degree(e) == 2

    def test_names(self):
        assert parse("z") == Var(0) and parse("w") == Var(1) and parse("z3") == Var(2)

    def test_precedence(self):
        z = [np.array([2.0 + 0j])]
        assert evaluate(parse("1 + 2*z^2"), z)[0] == 9
        assert evaluate(parse("-z^2"), z)[0] == -4
        assert evaluate(parse("(1+z)*(1-z)"), z)[0] == -3

    def test_power_expands(self):
        z = [np.array([0.3 + 0.7j])]
        assert abs(evaluate(parse("z^4 - 2*z^2 + 1"), z)[0] - ((0.3 + 0.7j) ** 4 - 2 * (0.3 + 0.7j) ** 2 + 1)) < 1e-14
        assert degree(parse("z^4")) == 4

    @pytest.mark.parametrize("bad", ["z+", "(z", "z^-1", "z^1.5", "foo(z)", "", "z0", "conj z"])
    def test_errors(self, bad):
        with pytest.raises(ParseError):
            parse(bad)

    def test_shared_subexpressions(self):
        e = parse("(z+w)*(z+w)")
        assert len({id(n) for n in postorder(e)}) == len(postorder(e))


class TestProperties:
    @settings(max_examples=150, deadline=None)
    @given(exprs(), st.integers(0, 2**31))
    def test_round_trip(self, e, seed):
        z = points(np.random.default_rng(seed), 2)
        back = parse(to_string(e))
        assert np.allclose(evaluate(back, z), evaluate(e, z), rtol=1e-12, atol=1e-9)

    @settings(max_examples=150, deadline=None)
    @given(exprs(), st.integers(0, 2**31))
    def test_simplify_preserves_value(self, e, seed):
        z = points(np.random.default_rng(seed), 2)
        assert np.allclose(evaluate(simplify(e), z), evaluate(e, z), rtol=1e-12, atol=1e-9)

    @settings(max_examples=150, deadline=None)
    @given(exprs(), st.floats(0.1, 3), st.integers(0, 2**31))
    def test_bounds_dominate(self, e, radius, seed):
        z = points(np.random.default_rng(seed), 2, radius=radius)
        bounds = magnitude_bounds(e, radius)
        for nd in postorder(e):
            assert np.abs(evaluate(nd, z)).max() <= bounds[nd] * (1 + 1e-12) + 1e-12

    def test_bound_rules(self):
        x = Var(0)
        b = magnitude_bounds(Mul(Square(x), Conj(x)), 2.0)
        assert b[Square(x)] == 4 and b[Conj(x)] == 2 and b[Mul(Square(x), Conj(x))] == 8

    def test_simplify_identities(self):
        x = Var(0)
        assert simplify(Conj(Conj(x))) == x
        assert simplify(Mul(x, x)) == Square(x)
        assert simplify(parse("z - z")) == Const(0)
        assert simplify(parse("0*z + w")) == Var(1)
