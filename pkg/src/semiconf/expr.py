"""Polynomial expressions with complex conjugation over complex variables.

Nodes are frozen dataclasses, so structurally equal subexpressions compare
and hash equal; the compiler uses that to build each shared node once.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np


class Expr:
    __slots__ = ()

    def children(self) -> tuple["Expr", ...]:
        return ()

    def __add__(self, other):
        return Add(self, as_expr(other))

    def __radd__(self, other):
        return Add(as_expr(other), self)

    def __sub__(self, other):
        return Sub(self, as_expr(other))

    def __rsub__(self, other):
        return Sub(as_expr(other), self)

    def __mul__(self, other):
        return Mul(self, as_expr(other))

    def __rmul__(self, other):
        return Mul(as_expr(other), self)

    def __neg__(self):
        return Scale(-1.0, self)

    def __pow__(self, k: int):
        return power(self, k)

    def __str__(self):
        return to_string(self)


@dataclass(frozen=True, repr=False)
class Var(Expr):
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("variable index must be >= 0")

    def __repr__(self):
        return f"Var({self.index})"


@dataclass(frozen=True, repr=False)
class Const(Expr):
    value: complex

    def __post_init__(self):
        object.__setattr__(self, "value", complex(self.value))

    @property
    def is_real(self) -> bool:
        return self.value.imag == 0.0

    def __repr__(self):
        return f"Const({self.value!r})"


@dataclass(frozen=True, repr=False)
class Add(Expr):
    a: Expr
    b: Expr

    def children(self):
        return (self.a, self.b)

    def __repr__(self):
        return f"Add({self.a!r}, {self.b!r})"


@dataclass(frozen=True, repr=False)
class Sub(Expr):
    a: Expr
    b: Expr

    def children(self):
        return (self.a, self.b)

    def __repr__(self):
        return f"Sub({self.a!r}, {self.b!r})"


@dataclass(frozen=True, repr=False)
class Mul(Expr):
    a: Expr
    b: Expr

    def children(self):
        return (self.a, self.b)

    def __repr__(self):
        return f"Mul({self.a!r}, {self.b!r})"


@dataclass(frozen=True, repr=False)
class Scale(Expr):
    lam: float
    a: Expr

    def __post_init__(self):
        lam = float(self.lam)
        if not math.isfinite(lam):
            raise ValueError("scale factor must be finite")
        object.__setattr__(self, "lam", lam)

    def children(self):
        return (self.a,)

    def __repr__(self):
        return f"Scale({self.lam!r}, {self.a!r})"


@dataclass(frozen=True, repr=False)
class Square(Expr):
    a: Expr

    def children(self):
        return (self.a,)

    def __repr__(self):
        return f"Square({self.a!r})"


@dataclass(frozen=True, repr=False)
class Conj(Expr):
    a: Expr

    def children(self):
        return (self.a,)

    def __repr__(self):
        return f"Conj({self.a!r})"


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float, complex, np.number)):
        return Const(complex(x))
    raise TypeError(f"cannot make an expression from {type(x).__name__}")


def power(e: Expr, k: int) -> Expr:
    """``e**k`` by repeated squaring."""
    if not isinstance(k, int) or k < 0:
        raise ValueError("only non-negative integer powers are supported")
    if k == 0:
        return Const(1)
    if k == 1:
        return e
    half = power(e, k // 2)
    sq = Square(half)
    return Mul(sq, e) if k % 2 else sq


def re_part(e: Expr) -> Expr:
    return Scale(0.5, Add(e, Conj(e)))


def im_part(e: Expr) -> Expr:
    return Mul(Const(-0.5j), Sub(e, Conj(e)))


def abs2(e: Expr) -> Expr:
    return Mul(e, Conj(e))


# ---------------------------------------------------------------------------
# Traversal


def postorder(e: Expr) -> list[Expr]:
    """Distinct nodes of the DAG, children before parents."""
    seen: set[Expr] = set()
    out: list[Expr] = []
    stack: list[tuple[Expr, bool]] = [(e, False)]
    while stack:
        node, done = stack.pop()
        if done:
            if node not in seen:
                seen.add(node)
                out.append(node)
            continue
        if node in seen:
            continue
        stack.append((node, True))
        for c in reversed(node.children()):
            if c not in seen:
                stack.append((c, False))
    return out


def n_vars(e: Expr) -> int:
    idx = [n.index for n in postorder(e) if isinstance(n, Var)]
    return max(idx) + 1 if idx else 0


def degree(e: Expr) -> int:
    deg: dict[Expr, int] = {}
    for n in postorder(e):
        if isinstance(n, Var):
            d = 1
        elif isinstance(n, Const):
            d = 0
        elif isinstance(n, (Add, Sub)):
            d = max(deg[n.a], deg[n.b])
        elif isinstance(n, Mul):
            d = deg[n.a] + deg[n.b]
        elif isinstance(n, Square):
            d = 2 * deg[n.a]
        else:
            d = deg[n.a]
        deg[n] = d
    return deg[e]


def evaluate(e: Expr, zs: Sequence) -> np.ndarray:
    """Evaluate on a batch: ``zs[i]`` holds the values of variable ``i``."""
    zs = [np.asarray(z, dtype=complex) for z in zs]
    val: dict[Expr, np.ndarray | complex] = {}
    for n in postorder(e):
        if isinstance(n, Var):
            if n.index >= len(zs):
                raise ValueError(f"expression uses z{n.index + 1} but only {len(zs)} values given")
            v = zs[n.index]
        elif isinstance(n, Const):
            v = n.value
        elif isinstance(n, Add):
            v = val[n.a] + val[n.b]
        elif isinstance(n, Sub):
            v = val[n.a] - val[n.b]
        elif isinstance(n, Mul):
            v = val[n.a] * val[n.b]
        elif isinstance(n, Scale):
            v = n.lam * val[n.a]
        elif isinstance(n, Square):
            v = val[n.a] ** 2
        else:
            v = np.conj(val[n.a])
        val[n] = v
    shape = np.broadcast(*zs).shape if zs else ()
    return np.broadcast_to(np.asarray(val[e], dtype=complex), shape).copy()


def magnitude_bounds(e: Expr, radius: float | Sequence[float]) -> dict[Expr, float]:
    """Upper bound on ``|value|`` of every node when ``|z_i| <= radius``."""
    k = n_vars(e)
    radii = [float(radius)] * k if np.ndim(radius) == 0 else [float(r) for r in radius]
    b: dict[Expr, float] = {}
    for n in postorder(e):
        if isinstance(n, Var):
            v = radii[n.index]
        elif isinstance(n, Const):
            v = abs(n.value)
        elif isinstance(n, (Add, Sub)):
            v = b[n.a] + b[n.b]
        elif isinstance(n, Mul):
            v = b[n.a] * b[n.b]
        elif isinstance(n, Scale):
            v = abs(n.lam) * b[n.a]
        elif isinstance(n, Square):
            v = b[n.a] ** 2
        else:
            v = b[n.a]
        b[n] = v
    return b


# ---------------------------------------------------------------------------
# Simplification


def _const(x) -> Const:
    return Const(complex(x))


def simplify(e: Expr) -> Expr:
    """Fold constants and apply a few identities that save gadgets.

    ``x + x -> 2x``, ``x - x -> 0``, ``x * x -> x^2``, ``conj(conj x) -> x``,
    real constants times ``x`` become scalings, and scalings merge.
    """
    memo: dict[Expr, Expr] = {}
    for n in postorder(e):
        memo[n] = _simplify_node(n, memo)
    return memo[e]


def _simplify_node(n: Expr, memo: dict[Expr, Expr]) -> Expr:
    if isinstance(n, (Var, Const)):
        return n
    kids = [memo[c] for c in n.children()]
    consts = [isinstance(k, Const) for k in kids]
    if all(consts):
        vals = [k.value for k in kids]
        if isinstance(n, Add):
            return _const(vals[0] + vals[1])
        if isinstance(n, Sub):
            return _const(vals[0] - vals[1])
        if isinstance(n, Mul):
            return _const(vals[0] * vals[1])
        if isinstance(n, Scale):
            return _const(n.lam * vals[0])
        if isinstance(n, Square):
            return _const(vals[0] ** 2)
        return _const(vals[0].conjugate())
    if isinstance(n, Add):
        a, b = kids
        if _is_zero(a):
            return b
        if _is_zero(b):
            return a
        if a == b:
            return _scale(2.0, a)
        return Add(a, b)
    if isinstance(n, Sub):
        a, b = kids
        if a == b:
            return Const(0)
        if _is_zero(b):
            return a
        if _is_zero(a):
            return _scale(-1.0, b)
        return Sub(a, b)
    if isinstance(n, Mul):
        a, b = kids
        if a == b:
            return Square(a)
        for x, y in ((a, b), (b, a)):
            if isinstance(x, Const) and x.is_real:
                return _scale(x.value.real, y)
        return Mul(a, b)
    if isinstance(n, Scale):
        return _scale(n.lam, kids[0])
    if isinstance(n, Square):
        return Square(kids[0])
    a = kids[0]
    if isinstance(a, Conj):
        return a.a
    return Conj(a)


def _is_zero(e: Expr) -> bool:
    return isinstance(e, Const) and e.value == 0


def _scale(lam: float, e: Expr) -> Expr:
    if lam == 0:
        return Const(0)
    if lam == 1:
        return e
    if isinstance(e, Scale):
        return _scale(lam * e.lam, e.a)
    if isinstance(e, Const):
        return _const(lam * e.value)
    return Scale(lam, e)


# ---------------------------------------------------------------------------
# Printing


def _fmt_num(x: float) -> str:
    return repr(float(x)) if x != int(x) or abs(x) >= 1e15 else str(int(x))


def _fmt_const(z: complex) -> str:
    if z.imag == 0:
        return _fmt_num(z.real)
    if z.real == 0:
        return f"{_fmt_num(z.imag)}i"
    sign = "+" if z.imag >= 0 else "-"
    return f"({_fmt_num(z.real)}{sign}{_fmt_num(abs(z.imag))}i)"


_PREC = {Add: 1, Sub: 1, Mul: 2, Scale: 2, Square: 3}


def to_string(e: Expr) -> str:
    """Render in the syntax accepted by :func:`parse`."""

    def go(n: Expr, parent: int) -> str:
        if isinstance(n, Var):
            return f"z{n.index + 1}"
        if isinstance(n, Const):
            s = _fmt_const(n.value)
            return f"({s})" if s.startswith("-") and parent > 0 else s
        if isinstance(n, Conj):
            return f"conj({go(n.a, 0)})"
        p = _PREC[type(n)]
        if isinstance(n, Add):
            s = f"{go(n.a, 1)} + {go(n.b, 1)}"
        elif isinstance(n, Sub):
            s = f"{go(n.a, 1)} - {go(n.b, 2)}"
        elif isinstance(n, Mul):
            s = f"{go(n.a, 2)}*{go(n.b, 3)}"
        elif isinstance(n, Scale):
            s = f"{_fmt_const(complex(n.lam))}*{go(n.a, 3)}"
            if n.lam < 0:
                s = f"({_fmt_num(n.lam)})*{go(n.a, 3)}"
        else:
            s = f"{go(n.a, 4)}^2"
        return f"({s})" if p < parent else s

    return go(e, 0)


# ---------------------------------------------------------------------------
# Parsing


class ParseError(ValueError):
    pass


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(?P<imag>i\b|j\b)?"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>\*\*|[-+*/^(),]))"
)
_FUNCS = {"conj": Conj, "re": re_part, "im": im_part, "abs2": abs2}


def _tokenize(text: str) -> list[tuple[str, str]]:
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos:].strip()[:1]!r} at position {pos}")
        pos = m.end()
        if m.group("num"):
            out.append(("imag" if m.group("imag") else "num", m.group("num")))
        elif m.group("name"):
            out.append(("name", m.group("name")))
        else:
            out.append(("op", "^" if m.group("op") == "**" else m.group("op")))
    out.append(("end", ""))
    return out


def _var_index(name: str) -> int | None:
    if name == "z":
        return 0
    if name == "w":
        return 1
    m = re.fullmatch(r"[zx](\d+)", name)
    if m and int(m.group(1)) >= 1:
        return int(m.group(1)) - 1
    return None


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str]:
        return self.toks[self.i]

    def take(self, kind: str, value: str | None = None) -> str:
        k, v = self.toks[self.i]
        if k != kind or (value is not None and v != value):
            want = value or kind
            raise ParseError(f"expected {want!r}, got {v or 'end of input'!r}")
        self.i += 1
        return v

    def expr(self) -> Expr:
        e = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take("op")
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.take("op")
            rhs = self.unary()
            if op == "*":
                e = Mul(e, rhs)
            else:
                rhs = simplify(rhs)
                if not isinstance(rhs, Const) or rhs.value == 0:
                    raise ParseError("division is only allowed by a nonzero constant")
                e = Mul(e, Const(1 / rhs.value))
        return e

    def unary(self) -> Expr:
        if self.peek() == ("op", "-"):
            self.take("op")
            return Scale(-1.0, self.unary())
        if self.peek() == ("op", "+"):
            self.take("op")
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take("op")
            k = self.take("num")
            if not re.fullmatch(r"\d+", k):
                raise ParseError(f"exponent must be a non-negative integer, got {k!r}")
            return power(base, int(k))
        return base

    def atom(self) -> Expr:
        kind, v = self.peek()
        if kind == "num":
            self.i += 1
            return Const(float(v))
        if kind == "imag":
            self.i += 1
            return Const(1j * float(v))
        if kind == "name":
            self.i += 1
            if v in _FUNCS:
                self.take("op", "(")
                arg = self.expr()
                self.take("op", ")")
                return _FUNCS[v](arg)
            if v in ("i", "j"):
                return Const(1j)
            idx = _var_index(v)
            if idx is None:
                raise ParseError(f"unknown name {v!r}")
            return Var(idx)
        if (kind, v) == ("op", "("):
            self.i += 1
            e = self.expr()
            self.take("op", ")")
            return e
        raise ParseError(f"unexpected {v or 'end of input'!r}")


def parse(text: str) -> Expr:
    """Parse e.g. ``"z1^2 + 2*conj(z2) - (0.5+1i)"``.

    Variables are ``z1, z2, ...`` (``z`` and ``w`` abbreviate ``z1`` and
    ``z2``; ``x1, x2, ...`` alias ``z1, z2, ...``).  Functions: ``conj``,
    ``re``, ``im``, ``abs2``.  ``^`` takes non-negative integer exponents.
    """
    p = _Parser(text)
    e = p.expr()
    p.take("end")
    return e


def sum_exprs(items: Sequence[Expr]) -> Expr:
    return reduce(Add, items) if items else Const(0)


__all__ = [
    "Add", "Conj", "Const", "Expr", "Mul", "ParseError", "Scale", "Square", "Sub", "Var", "abs2",
    "as_expr", "degree", "evaluate", "im_part", "magnitude_bounds", "n_vars", "parse", "postorder",
    "power", "re_part", "simplify", "sum_exprs", "to_string",
]
