import numpy as np
import pytest

from semiconf.core import LinkageBuilder


def four_bar(a=0.3, b=0.9, c=0.6, ground=1.0):
    bl = LinkageBuilder()
    bl.add_vertex("A", 0j)
    bl.add_vertex("D", complex(ground))
    bl.add_edge("A", "B", a)
    bl.add_edge("D", "C", c)
    bl.add_edge("B", "C", b)
    return bl.build()


def triangle(pins=None, side=1.0):
    bl = LinkageBuilder()
    for u, v in (("A", "B"), ("B", "C"), ("C", "A")):
        bl.add_edge(u, v, side)
    for v, z in (pins or {}).items():
        bl.pin(v, z)
    return bl.build()


def collinearity(a, b, c):
    """|(b - a) x (c - a)| for complex points."""
    return abs(((b - a).conjugate() * (c - a)).imag)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[cid])
