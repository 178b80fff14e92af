import xml.etree.ElementTree as ET

from conftest import four_bar
from semiconf.gadgets import peaucellier, squaring
from semiconf.qf import forward_place
from semiconf.render import GRAY, render_svg

NS = "{http://www.w3.org/2000/svg}"


def parse(svg):
    return ET.fromstring(svg)


def test_peaucellier_styles():
    g = peaucellier(5, 4, 3)
    r = forward_place(g, [2 + 1j])
    root = parse(render_svg(g.linkage, r, ["D", "E"]))
    lines = root.findall(f".//{NS}line")
    assert len(lines) == len(g.linkage.edges)
    gray = [ln for ln in lines if ln.get("stroke") == GRAY]
    assert len(gray) >= 2
    assert len(root.findall(f"{NS}rect")) == len(g.linkage.pinned)
    assert len([c for c in root.findall(f"{NS}circle") if c.get("class") == "marker"]) == 2


def test_cables_dashed():
    g = squaring(1.0)
    r = forward_place(g, [0.4 + 0.3j])
    root = parse(render_svg(g.linkage, r))
    cables = [ln for ln in root.iter(f"{NS}line") if "cable" in ln.get("class")]
    assert cables and all(ln.get("stroke-dasharray") for ln in cables)


def test_viewbox_contains_vertices():
    from semiconf.solver import sample_configurations

    lk = four_bar()
    r = sample_configurations(lk, 1, 0)[0]
    root = parse(render_svg(lk, r, labels=False))
    x, y, w, h = map(float, root.get("viewBox").split())
    for z in r.positions.values():
        assert x <= z.real <= x + w and y <= -z.imag <= y + h
    assert not root.findall(f"{NS}text")
