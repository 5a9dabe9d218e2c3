"""Numpy fallback for the compiled kernels in ``_kernels_cy.pyx``."""

from __future__ import annotations

import numpy as np


def structured_block(PT, QT, a, b, ptr, rows, cols, scale):
    """Column ``p`` of the result is ``scale[p] * sum(a[i] P[:, j] + b[j] Q[:, i])``.

    The sum runs over the entries ``(i, j) = (rows[e], cols[e])`` for
    ``ptr[p] <= e < ptr[p + 1]``.  ``PT`` and ``QT`` are the transposes of
    ``P`` (k x n) and ``Q`` (k x m).
    """
    k = PT.shape[1]
    nparam = len(ptr) - 1
    if nparam == 0:
        return np.zeros((k, 0))
    terms = a[rows][:, None] * PT[cols] + b[cols][:, None] * QT[rows]
    sums = np.add.reduceat(terms, ptr[:-1], axis=0)
    return (sums * scale[:, None]).T
