"""SVG drawings of realized linkages.

Bars are black lines, brace edges gray, cable halves gray and dashed.  Pins
are filled squares, markers open circles, other vertices small dots.  The
plane's y axis points up, so the drawing is flipped into SVG coordinates.
"""
from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

from .core import Linkage, Realization

MARGIN = 0.05
GRAY = "#999999"

_STYLE = {
    "bar": 'stroke="#000000"',
    "brace": f'stroke="{GRAY}"',
    "cable": f'stroke="{GRAY}" stroke-dasharray="{{dash}}"',
}


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def render_svg(linkage: Linkage, realization: Realization, markers: Sequence[str] = (),
               width: int = 600, labels: bool = True) -> str:
    """SVG document for ``realization``; the view box is fitted with a 5% margin."""
    pos = realization.positions
    pts = [pos[v] for v in linkage.vertices]
    xs = [z.real for z in pts] or [0.0]
    ys = [-z.imag for z in pts] or [0.0]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    span = max(x1 - x0, y1 - y0, 1e-9)
    m = MARGIN * span
    vb = (x0 - m, y0 - m, (x1 - x0) + 2 * m, (y1 - y0) + 2 * m)
    height = max(1, round(width * vb[3] / vb[2])) if vb[2] > 0 else width
    sw = span / 300  # stroke width
    r = span / 120  # vertex size

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="{" ".join(_fmt(v) for v in vb)}">',
        f'<g fill="none" stroke-width="{_fmt(sw)}" stroke-linecap="round">',
    ]
    for e in linkage.edges:
        a, b = pos[e.u], pos[e.v]
        style = _STYLE.get(e.kind, _STYLE["bar"]).replace("{dash}", f"{_fmt(3 * sw)} {_fmt(2 * sw)}")
        out.append(f'<line class="edge {e.kind}" x1="{_fmt(a.real)}" y1="{_fmt(-a.imag)}" '
                   f'x2="{_fmt(b.real)}" y2="{_fmt(-b.imag)}" {style}/>')
    out.append("</g>")
    marked = set(markers)
    for v in linkage.vertices:
        z = pos[v]
        cx, cy = z.real, -z.imag
        if v in linkage.pinned:
            out.append(f'<rect class="pin" x="{_fmt(cx - r)}" y="{_fmt(cy - r)}" width="{_fmt(2 * r)}" '
                       f'height="{_fmt(2 * r)}" fill="#000000"/>')
        if v in marked:
            out.append(f'<circle class="marker" cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(1.6 * r)}" '
                       f'fill="none" stroke="#c00000" stroke-width="{_fmt(sw)}"/>')
        elif v not in linkage.pinned:
            out.append(f'<circle class="joint" cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(0.5 * r)}" fill="#000000"/>')
        if labels and (v in marked or v in linkage.pinned):
            out.append(f'<text x="{_fmt(cx + 2 * r)}" y="{_fmt(cy - 2 * r)}" font-size="{_fmt(4 * r)}" '
                       f'font-family="sans-serif">{escape(str(v))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


__all__ = ["render_svg"]
