"""Linear matrix structures and the structured partial condition number.

A structure of ``m x n`` matrices is described by an incidence matrix
``Phi`` (``mn x k``) with ``vec(A) = Phi s`` for the ``k`` free parameters
``s``.  Column ``p`` of ``Phi`` marks the entries bound to parameter ``p``;
``d_p`` is its column norm, so ``Phi D^{-1}`` has orthonormal columns.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import kernels
from .condition import ConditionReport, _weights, spectral_norm_sym
from .core import ConditionWeights, LseProblem, LseSolution, ap_pinv, ba_pinv, solve_lse
from .errors import OracleTooLargeError, ShapeError, StructureViolationError

STRUCTURED_LIMIT = 50_000_000


class StructureKind(str, Enum):
    TOEPLITZ = "toeplitz"
    HANKEL = "hankel"
    SYMMETRIC = "symmetric"
    FULL = "full"


@dataclass(frozen=True)
class StructureSpec:
    kind: StructureKind
    rows: int
    cols: int

    def __post_init__(self):
        object.__setattr__(self, "kind", StructureKind(self.kind))
        if self.rows < 0 or self.cols < 0:
            raise ShapeError("structure dimensions must be nonnegative")
        if self.kind is StructureKind.SYMMETRIC and self.rows != self.cols:
            raise ShapeError(f"symmetric structure needs a square shape, got {self.rows}x{self.cols}")

    @property
    def params(self) -> int:
        m, n = self.rows, self.cols
        if m * n == 0:
            return 0
        if self.kind in (StructureKind.TOEPLITZ, StructureKind.HANKEL):
            return m + n - 1
        if self.kind is StructureKind.SYMMETRIC:
            return n * (n + 1) // 2
        return m * n


def _param_map(spec: StructureSpec) -> np.ndarray:
    """Parameter index of every entry, as an ``m x n`` integer array."""
    m, n = spec.rows, spec.cols
    i, j = np.meshgrid(np.arange(m), np.arange(n), indexing="ij")
    kind = spec.kind
    if kind is StructureKind.TOEPLITZ:
        # bottom-left diagonal first, top-right last
        return j - i + (m - 1)
    if kind is StructureKind.HANKEL:
        return i + j
    if kind is StructureKind.SYMMETRIC:
        lo, hi = np.minimum(i, j), np.maximum(i, j)
        return hi * (hi + 1) // 2 + lo
    return i + j * m


@dataclass(frozen=True)
class StructureMatrix:
    """``Phi`` stored by column: entries of parameter ``p`` are ``ptr[p]:ptr[p+1]``.

    ``rows``/``cols`` give the matrix position of each entry, ``vec_index``
    its position in ``vec(A)`` (column-major).
    """

    spec: StructureSpec
    ptr: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    d: np.ndarray
    param_of: np.ndarray

    @property
    def k(self) -> int:
        return len(self.d)

    @property
    def vec_index(self) -> np.ndarray:
        return self.rows + self.cols * self.spec.rows

    def phi(self) -> sp.csc_matrix:
        mn = self.spec.rows * self.spec.cols
        return sp.csc_matrix((np.ones(len(self.rows)), self.vec_index, self.ptr), shape=(mn, self.k))

    def phi_scaled(self) -> sp.csc_matrix:
        """``Phi D^{-1}``, column orthonormal."""
        return self.phi() @ sp.diags(1.0 / self.d)


def build_structure(spec: StructureSpec) -> StructureMatrix:
    pmap = _param_map(spec)
    flat = pmap.ravel(order="F")
    k = spec.params
    order = np.argsort(flat, kind="stable")
    vec = order
    counts = np.bincount(flat, minlength=k)
    ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    rows = (vec % spec.rows).astype(np.int64) if spec.rows else vec.astype(np.int64)
    cols = (vec // spec.rows).astype(np.int64) if spec.rows else vec.astype(np.int64)
    return StructureMatrix(spec=spec, ptr=ptr, rows=rows, cols=cols,
                           d=np.sqrt(counts.astype(float)), param_of=pmap)


def extract_params(structure: StructureMatrix, A, tol: float = 1e-12) -> np.ndarray:
    """Parameters ``s`` with ``vec(A) = Phi s``; raises if ``A`` is off the structure."""
    A = np.asarray(A, dtype=float)
    spec = structure.spec
    if A.shape != (spec.rows, spec.cols):
        raise ShapeError(f"expected a {spec.rows}x{spec.cols} matrix, got {A.shape}")
    # one representative entry per parameter keeps embed/extract exact
    first = structure.ptr[:-1]
    s = A[structure.rows[first], structure.cols[first]].copy()
    resid = np.linalg.norm(A - s[structure.param_of])
    if resid > tol * max(np.linalg.norm(A), np.finfo(float).tiny):
        raise StructureViolationError(
            f"matrix is not {spec.kind.value}: residual {resid:.3e} relative to {np.linalg.norm(A):.3e}")
    return s


def embed_params(structure: StructureMatrix, s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.shape != (structure.k,):
        raise ShapeError(f"expected {structure.k} parameters, got shape {s.shape}")
    return s[structure.param_of]


def _derivative_pieces(problem: LseProblem, w: ConditionWeights, solution: LseSolution):
    f = solution.factors
    L = w.matrix(problem.n)
    ap = ap_pinv(f)
    ba = ba_pinv(f)
    APL = L.T @ ap
    GL = APL @ ap.T
    BL = L.T @ ba
    wr = ba.T @ (problem.A.T @ solution.r)
    return GL, APL, BL, wr


def structured_derivative(problem: LseProblem, weights: ConditionWeights | None,
                          struct_A: StructureMatrix, struct_B: StructureMatrix,
                          solution: LseSolution | None = None, backend: str | None = None,
                          max_entries: int = STRUCTURED_LIMIT) -> np.ndarray:
    """``M blockdiag(Phi_A D_A^{-1}, Phi_B D_B^{-1}, I_m, I_s)`` assembled column-sparsely.

    Entry ``(i, j)`` of ``dA`` contributes ``(r_i G_L[:, j] - x_j (AP)^+_L[:, i]) / alpha_A``
    and entry ``(i, j)`` of ``dB`` contributes
    ``-(w_i G_L[:, j] + x_j (B_A^+)_L[:, i]) / alpha_B`` with ``w = (A B_A^+)^T r``.
    """
    w = _weights(weights)
    if solution is None:
        solution = solve_lse(problem)
    k = w.matrix(problem.n).shape[1]
    if k * (struct_A.k + struct_B.k + problem.m + problem.s) > max_entries:
        raise OracleTooLargeError("structured derivative too large to materialize")
    GL, APL, BL, wr = _derivative_pieces(problem, w, solution)
    x, r = solution.x, solution.r
    MA = kernels.structured_block(GL, APL, r / w.alpha_A, -x / w.alpha_A, struct_A.ptr,
                                  struct_A.rows, struct_A.cols, 1.0 / struct_A.d, backend=backend)
    if problem.s:
        MB = kernels.structured_block(GL, BL, -wr / w.alpha_B, -x / w.alpha_B, struct_B.ptr,
                                      struct_B.rows, struct_B.cols, 1.0 / struct_B.d, backend=backend)
    else:
        MB = np.zeros((k, 0))
    return np.hstack([MA, MB, APL / w.alpha_b, BL / w.alpha_d])


def _spec_for(kind, rows, cols) -> StructureMatrix:
    if isinstance(kind, StructureMatrix):
        return kind
    if isinstance(kind, StructureSpec):
        return build_structure(kind)
    return build_structure(StructureSpec(StructureKind(kind), rows, cols))


def _norm_wide(M: np.ndarray) -> float:
    """Spectral norm of a short, wide matrix via its k x k Gram matrix."""
    if M.size == 0:
        return 0.0
    return float(np.sqrt(spectral_norm_sym(M @ M.T)))


def cond_structured(problem: LseProblem, weights: ConditionWeights | None = None,
                    spec_A="full", spec_B="full", solution: LseSolution | None = None,
                    backend: str | None = None) -> ConditionReport:
    """Structured partial condition number for linear structures on ``A`` and ``B``."""
    t0 = time.perf_counter()
    SA = _spec_for(spec_A, problem.m, problem.n)
    SB = _spec_for(spec_B, problem.s, problem.n)
    extract_params(SA, problem.A)
    if problem.s:
        extract_params(SB, problem.B)
    M = structured_derivative(problem, weights, SA, SB, solution, backend)
    kappa = _norm_wide(M)
    return ConditionReport(kappa, "structured", kappa**2, time.perf_counter() - t0)


@dataclass(frozen=True)
class StructuredLlsResult:
    kappa_s: float
    kappa_bound: float


def cond_structured_lls(A, b, weights: ConditionWeights | None = None, spec_A="full",
                        backend: str | None = None) -> StructuredLlsResult:
    """Structured LLS condition number and the unstructured value bounding it."""
    problem = LseProblem.lls(A, b)
    w = _weights(weights)
    SA = _spec_for(spec_A, problem.m, problem.n)
    extract_params(SA, problem.A)
    solution = solve_lse(problem)
    empty = build_structure(StructureSpec(StructureKind.FULL, 0, problem.n))
    Ms = structured_derivative(problem, w, SA, empty, solution, backend)
    full = build_structure(StructureSpec(StructureKind.FULL, problem.m, problem.n))
    Mu = structured_derivative(problem, w, full, empty, solution, backend)
    return StructuredLlsResult(_norm_wide(Ms), _norm_wide(Mu))


def spectral_norm(M: np.ndarray) -> float:
    return float(sla.svdvals(M)[0]) if M.size else 0.0
