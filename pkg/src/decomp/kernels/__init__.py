"""Kernel backend selection.

DECOMP_BACKEND=numpy forces the pure-numpy fallback; DECOMP_BACKEND=numba
requires numba. Unset, numba is used when it imports and numpy otherwise.
benchmarks/bench_kernels.py compares the two.
"""

from __future__ import annotations

import os

from . import numpy_backend

_requested = os.environ.get("DECOMP_BACKEND", "").strip().lower()

if _requested == "numpy":
    _impl = numpy_backend
elif _requested == "numba":
    from . import numba_backend as _impl
else:
    try:
        from . import numba_backend as _impl
    except ImportError:
        _impl = numpy_backend

BACKEND = _impl.NAME
eval_points = _impl.eval_points
eval_boxes = _impl.eval_boxes


def get_backend(name: str):
    """Explicit backend module, for parity tests and benchmarks."""
    if name == "numpy":
        return numpy_backend
    if name == "numba":
        from . import numba_backend
        return numba_backend
    raise ValueError(f"unknown kernel backend {name!r}")


def available_backends() -> list[str]:
    out = ["numpy"]
    try:
        from . import numba_backend  # noqa: F401
        out.append("numba")
    except ImportError:
        pass
    return out
