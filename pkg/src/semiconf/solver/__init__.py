"""Numerical realization finding.

The Levenberg-Marquardt inner loop is provided by the compiled extension
``_kernel`` when it was built, otherwise by the numpy module ``_kernel_py``.
``BACKEND`` names the active one; :func:`set_backend` switches explicitly.
"""
from __future__ import annotations

from . import _kernel_py

try:
    from . import _kernel as _kernel_c
except ImportError:  # extension not built
    _kernel_c = None

BACKEND = "cython" if _kernel_c is not None else "python"


def available_backends() -> list[str]:
    return ["cython", "python"] if _kernel_c is not None else ["python"]


def set_backend(name: str) -> None:
    global BACKEND
    if name not in ("cython", "python"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "cython" and _kernel_c is None:
        raise RuntimeError("the compiled kernel is not available; rebuild the package")
    BACKEND = name


def _active_kernel():
    return _kernel_c if BACKEND == "cython" else _kernel_py


from .engine import (  # noqa: E402
    SolveProblem,
    SolveResult,
    TraceResult,
    canonical_array,
    dedup_indices,
    dedup_realizations,
    sample_configurations,
    solve,
    solve_linkage,
    trace,
)

__all__ = [
    "BACKEND", "SolveProblem", "SolveResult", "TraceResult", "available_backends", "canonical_array",
    "dedup_indices", "dedup_realizations", "sample_configurations", "set_backend", "solve", "solve_linkage",
    "trace",
]
