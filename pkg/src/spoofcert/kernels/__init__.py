"""Hot numeric kernels, numba-compiled when available.

Set ``SPOOFCERT_DISABLE_NUMBA=1`` to force the pure-numpy path. The
selection happens once at import time; both implementations stay
importable as :data:`numpy_backend` and :func:`numba_backend` for
benchmarks and cross-checking tests.
"""

import os

from . import _numpy as numpy_backend

__all__ = [
    "BACKEND", "numpy_backend", "numba_backend", "normalize", "union",
    "complement", "intersect", "difference", "is_subset", "contains",
    "mix64", "unknown_mask",
]


def numba_backend():
    """Import the numba kernels, or return None if numba is unusable."""
    try:
        from . import _numba
    except ImportError:
        return None
    return _numba


def _select():
    if os.environ.get("SPOOFCERT_DISABLE_NUMBA", "").strip() not in ("", "0"):
        return "numpy", numpy_backend
    mod = numba_backend()
    if mod is None:
        return "numpy", numpy_backend
    return "numba", mod


BACKEND, _impl = _select()

normalize = _impl.normalize
union = _impl.union
complement = _impl.complement
intersect = _impl.intersect
difference = _impl.difference
is_subset = _impl.is_subset
contains = _impl.contains
mix64 = _impl.mix64
unknown_mask = _impl.unknown_mask
