"""JSON artifacts for linkages, gadgets and realizations.

Linkage files look like::

    {"vertices": [...], "edges": [{"u": .., "v": .., "len": .., "kind": ..}],
     "pinned": {"A": [x, y]}, "markers": [...],
     "io": {"inputs": [...], "outputs": [...]},
     "gadget": {"kind": .., "params": {..}}, "log": [...]}

A gadget is restored by calling its constructor again with the stored
parameters; the result must reproduce the stored linkage.
"""
from __future__ import annotations

import json
import logging
import math
import re
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .core import Edge, Linkage, LinkageError, Realization
from .qf import QFLinkage

log = logging.getLogger(__name__)

FORMAT_VERSION = 1


def _pt(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _cx(p) -> complex:
    if isinstance(p, str):
        return parse_complex(p)
    if isinstance(p, (int, float)):
        return complex(p)
    x, y = p
    return complex(float(x), float(y))


def parse_complex(s: str) -> complex:
    """``"2+1i"``, ``"-1-1i"``, ``"i"``, ``"0.5"``; ``j`` works as well as ``i``."""
    t = s.strip().replace(" ", "").replace("i", "j")
    if not t:
        raise ValueError("empty complex number")
    try:
        return complex(t)
    except ValueError:
        raise ValueError(f"cannot parse complex number {s!r}") from None


# ---------------------------------------------------------------------------
# Linkages and gadgets


def linkage_to_dict(lk: Linkage, markers=(), inputs=(), outputs=()) -> dict:
    return {
        "format": FORMAT_VERSION,
        "vertices": list(lk.vertices),
        "edges": [{"u": e.u, "v": e.v, "len": e.length, "kind": e.kind} for e in lk.edges],
        "pinned": {v: _pt(z) for v, z in lk.pinned.items()},
        "markers": list(markers),
        "io": {"inputs": list(inputs), "outputs": list(outputs)},
    }


def linkage_from_dict(d: Mapping) -> Linkage:
    try:
        edges = [Edge(e["u"], e["v"], float(e["len"]), e.get("kind", "bar")) for e in d["edges"]]
        pinned = {v: _cx(p) for v, p in d.get("pinned", {}).items()}
        return Linkage(tuple(d["vertices"]), tuple(edges), pinned)
    except (KeyError, TypeError) as exc:
        raise LinkageError(f"malformed linkage JSON: {exc}") from None


def _jsonable(x):
    if isinstance(x, complex):
        return _pt(x)
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, Mapping):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def gadget_to_dict(g, markers=None) -> dict:
    """Serialize a :class:`QFLinkage` or a compiled QF (with its log)."""
    from .compiler import CompiledQF

    logs = None
    if isinstance(g, CompiledQF):
        logs = g.log
        g = g.qf
    if markers is None:
        markers = list(g.inputs) + list(g.outputs)
    d = linkage_to_dict(g.linkage, markers, g.inputs, g.outputs)
    d["gadget"] = {"kind": g.kind, "params": _jsonable(dict(g.params))}
    if logs is not None:
        d["log"] = _jsonable(logs)
    return d


def _builders() -> dict[str, Callable[[Mapping], object]]:
    from . import gadgets as G
    from .compiler import compile_expr

    def panto(mode):
        return lambda p: G.pantograph(mode, p["a"], p.get("c", 1.0), _cx(p.get("pivot", 0.0)))

    out = {
        "identity": lambda p: G.identity_gadget(p.get("side", 1.0)),
        "peaucellier": lambda p: G.peaucellier(p["a"], p["b"], p["c"], _cx(p.get("pivot", 0.0))),
        "squaring": lambda p: G.squaring(p["r"]),
        "conjugation": lambda p: G.conjugation(p["r"], p.get("a"), p.get("b"), p.get("c")),
        "straight-line": lambda p: G.straight_line(_cx(p["p"]), _cx(p["q"]), tuple(p.get("base", (5, 4, 3)))),
        "compiled": lambda p: compile_expr(p["expr"], p["n_vars"], p["radius"]),
    }
    for m in G.PantographMode:
        out[f"pantograph-{m.value}"] = panto(m.value)
    return out


def rebuild_gadget(d: Mapping):
    """Reconstruct the gadget (``QFLinkage`` or ``CompiledQF``) described by ``d``, or ``None``."""
    info = d.get("gadget")
    if not info:
        return None
    build = _builders().get(info.get("kind"))
    if build is None:
        log.warning("no constructor for gadget kind %r; loading the bare linkage", info.get("kind"))
        return None
    g = build(info.get("params", {}))
    lk = g.linkage if isinstance(g, QFLinkage) else g.qf.linkage
    if not lk.isclose(linkage_from_dict(d)):
        raise LinkageError(f"stored linkage does not match a fresh {info['kind']} gadget")
    return g


class Artifact:
    """A loaded linkage file: the linkage, its markers and I/O, and the gadget if any."""

    def __init__(self, data: Mapping):
        self.data = dict(data)
        self.linkage = linkage_from_dict(data)
        self.markers = tuple(data.get("markers", ()))
        io = data.get("io", {})
        self.inputs = tuple(io.get("inputs", ()))
        self.outputs = tuple(io.get("outputs", ()))
        self.gadget = rebuild_gadget(data)

    @property
    def qf(self) -> QFLinkage | None:
        g = self.gadget
        if g is None:
            return None
        return g if isinstance(g, QFLinkage) else g.qf


def save(obj, path: str | Path, markers=None) -> None:
    """Write a gadget, compiled QF or bare linkage to ``path``."""
    if isinstance(obj, Linkage):
        d = linkage_to_dict(obj, markers or ())
    else:
        d = gadget_to_dict(obj, markers)
    Path(path).write_text(json.dumps(d, indent=1))


def load(path: str | Path) -> Artifact:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise LinkageError(f"{path}: not valid JSON ({exc})") from None
    return Artifact(data)


# ---------------------------------------------------------------------------
# Realizations


def realization_to_dict(r: Realization, **extra) -> dict:
    return {**_jsonable(extra), "positions": r.to_dict()}


def realization_from_dict(d: Mapping) -> Realization:
    pos = d.get("positions", d)
    return Realization({v: _cx(p) for v, p in pos.items()})


def load_realization(path: str | Path) -> Realization:
    return realization_from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# Paths


def parse_path(text: str) -> Callable[[float], complex]:
    """Path ``s -> z`` for ``s`` in ``[0, 1]``.

    ``"circle C R"``: counterclockwise from ``C + R``; ``"line P Q"``: the
    segment from ``P`` to ``Q``; ``"arc C R A0 A1"``: angles in degrees.
    """
    parts = text.split()
    if not parts:
        raise ValueError("empty path")
    kind, args = parts[0].lower(), parts[1:]
    try:
        if kind == "circle" and len(args) == 2:
            c, r = parse_complex(args[0]), float(args[1])
            return lambda s: c + r * complex(math.cos(2 * math.pi * s), math.sin(2 * math.pi * s))
        if kind in ("line", "segment") and len(args) == 2:
            p, q = parse_complex(args[0]), parse_complex(args[1])
            return lambda s: p + s * (q - p)
        if kind == "arc" and len(args) == 4:
            c, r = parse_complex(args[0]), float(args[1])
            a0, a1 = math.radians(float(args[2])), math.radians(float(args[3]))
            return lambda s: c + r * complex(math.cos(a0 + s * (a1 - a0)), math.sin(a0 + s * (a1 - a0)))
    except ValueError as exc:
        raise ValueError(f"bad path {text!r}: {exc}") from None
    raise ValueError(f"bad path {text!r}; expected 'circle C R', 'line P Q' or 'arc C R A0 A1'")


_MARKER_RE = re.compile(r"\s*,\s*")


def parse_markers(s: str) -> list[str]:
    return [m for m in _MARKER_RE.split(s.strip()) if m]


__all__ = [
    "Artifact", "gadget_to_dict", "linkage_from_dict", "linkage_to_dict", "load", "load_realization",
    "parse_complex", "parse_markers", "parse_path", "realization_from_dict", "realization_to_dict",
    "rebuild_gadget", "save",
]
