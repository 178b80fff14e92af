"""Planar linkages that compute polynomial maps and trace semialgebraic sets.

Submodules:

- :mod:`semiconf.core`: linkages, realizations, surgeries
- :mod:`semiconf.gadgets`: identity, pantographs, inversor, squaring, conjugation, straight line
- :mod:`semiconf.compiler`: polynomial expressions to linkages
- :mod:`semiconf.solver`: realization finding, sampling and tracing
- :mod:`semiconf.analysis`: sampled property checks
- :mod:`semiconf.cli`: the ``semiconf`` command
"""
from .core import (
    TAU_EXACT,
    TAU_SOLVE,
    Edge,
    EuclideanMotion,
    Linkage,
    LinkageBuilder,
    LinkageError,
    MarkerSet,
    Realization,
    add_anchor_frame,
    disjoint_union,
    pin,
    relax_anchors,
    rescale,
    splice,
    transform,
    unpin,
    validate,
)
from .compiler import compile_expr, linkage_for_zero_set
from .expr import parse
from .qf import QFLinkage, forward_place
from .solver import BACKEND, sample_configurations, solve, trace

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Edge", "EuclideanMotion", "Linkage", "LinkageBuilder", "LinkageError", "MarkerSet", "QFLinkage",
    "Realization", "TAU_EXACT", "TAU_SOLVE", "add_anchor_frame", "compile_expr", "disjoint_union",
    "forward_place", "linkage_for_zero_set", "parse", "pin", "relax_anchors", "rescale", "sample_configurations",
    "solve", "splice", "trace", "transform", "unpin", "validate",
]
