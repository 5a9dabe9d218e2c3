"""Kernel dispatch: the compiled extension when importable, numpy otherwise.

Set ``LSECOND_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

try:
    from . import _kernels_cy as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None

if _compiled is not None and not os.environ.get("LSECOND_PURE_PYTHON"):
    BACKEND = "cython"
    _impl = _compiled
else:
    BACKEND = "python"
    _impl = _kernels_py


def structured_block(P, Q, a, b, ptr, rows, cols, scale, backend: str | None = None):
    """``scale_p * sum_{(i,j) in param p} (a_i P[:, j] + b_j Q[:, i])`` for every parameter.

    Returns a ``k x nparam`` array.  Every parameter must own at least one
    entry.
    """
    impl = _select(backend)
    return impl.structured_block(
        np.ascontiguousarray(np.asarray(P, dtype=float).T),
        np.ascontiguousarray(np.asarray(Q, dtype=float).T),
        np.ascontiguousarray(a, dtype=float),
        np.ascontiguousarray(b, dtype=float),
        np.ascontiguousarray(ptr, dtype=np.int64),
        np.ascontiguousarray(rows, dtype=np.int64),
        np.ascontiguousarray(cols, dtype=np.int64),
        np.ascontiguousarray(scale, dtype=float),
    )


def available_backends() -> list[str]:
    return ["python"] + (["cython"] if _compiled is not None else [])


def _select(backend):
    if backend is None:
        return _impl
    if backend == "python":
        return _kernels_py
    if backend == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {backend!r}")
