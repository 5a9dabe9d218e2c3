"""Exact partial condition numbers of the LSE and LLS solutions.

Three equivalent routes compute ``kappa = ||M||_2`` for the derivative
matrix ``M = [M1, M2, M3, M4]`` of ``(A, B, b, d) -> L^T x``:

* :func:`cond_exact_kron` assembles ``M`` with Kronecker products (oracle,
  small sizes only);
* :func:`cond_exact_closed` forms the k x k matrix ``C = M M^T`` from dense
  pseudo-inverses;
* :func:`cond_exact_gsvd` forms the same ``C`` from the generalized SVD
  without any explicit pseudo-inverse.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .core import (
    ConditionWeights,
    LseProblem,
    LseSolution,
    ap_pinv,
    ba_pinv,
    dense_operators,
    solve_lse,
)
from .errors import DomainError, OracleTooLargeError, RankDeficiencyError

log = logging.getLogger(__name__)

KRON_LIMIT = 10_000

METHODS = ("kron_oracle", "closed", "gsvd", "lls_closed", "lls_svd", "upper_bound",
           "structured", "structured_lls")


@dataclass(frozen=True)
class ConditionReport:
    kappa: float
    method: str
    C_norm: float | None = None
    elapsed: float = 0.0

    def to_dict(self) -> dict:
        return {"kappa": self.kappa, "method": self.method, "C_norm": self.C_norm,
                "elapsed_ms": 1e3 * self.elapsed}


@dataclass(frozen=True)
class KroneckerBlocks:
    M1: np.ndarray
    M2: np.ndarray
    M3: np.ndarray
    M4: np.ndarray

    def assembled(self) -> np.ndarray:
        return np.hstack([self.M1, self.M2, self.M3, self.M4])


def _weights(weights: ConditionWeights | None) -> ConditionWeights:
    return ConditionWeights() if weights is None else weights


def vec_permutation(p: int, q: int) -> np.ndarray:
    """Column map of ``K @ Pi_{pq}``: ``(K Pi)[:, c] == K[:, perm[c]]``.

    ``Pi_{pq} vec(X) = vec(X^T)`` for ``X`` of shape (p, q).
    """
    i, j = np.meshgrid(np.arange(p), np.arange(q), indexing="ij")
    perm = np.empty(p * q, dtype=np.int64)
    perm[(i + j * p).ravel()] = (j + i * q).ravel()
    return perm


def spectral_norm_sym(C: np.ndarray) -> float:
    """Largest eigenvalue of the symmetrized ``C`` (PSD, so its 2-norm)."""
    if C.size == 0:
        return 0.0
    C = 0.5 * (C + C.T)
    return float(max(sla.eigvalsh(C)[-1], 0.0))


def kron_oracle(problem: LseProblem, weights: ConditionWeights | None = None,
                max_entries: int = KRON_LIMIT) -> KroneckerBlocks:
    """Explicit derivative blocks built with ``np.kron`` and vec-permutations."""
    w = _weights(weights)
    m, n, s = problem.m, problem.n, problem.s
    if m * n + s * n > max_entries:
        raise OracleTooLargeError(
            f"mn + sn = {m * n + s * n} exceeds {max_entries}; use the closed or gsvd route")
    ops = dense_operators(problem)
    L = w.matrix(n)
    x, r = ops.x, ops.r
    G = ops.ap_pinv @ ops.ap_pinv.T
    GL = L.T @ G
    APL = L.T @ ops.ap_pinv
    BL = L.T @ ops.ba_pinv
    rAB = (problem.A @ ops.ba_pinv).T @ r
    M1 = (np.kron(r[None, :], GL)[:, vec_permutation(m, n)] - np.kron(x[None, :], APL)) / w.alpha_A
    M2 = -(np.kron(rAB[None, :], GL)[:, vec_permutation(s, n)] + np.kron(x[None, :], BL)) / w.alpha_B
    return KroneckerBlocks(M1=M1, M2=M2, M3=APL / w.alpha_b, M4=BL / w.alpha_d)


def cond_exact_kron(problem: LseProblem, weights: ConditionWeights | None = None,
                    max_entries: int = KRON_LIMIT) -> ConditionReport:
    t0 = time.perf_counter()
    M = kron_oracle(problem, weights, max_entries).assembled()
    kappa = float(sla.svdvals(M)[0]) if M.size else 0.0
    return ConditionReport(kappa, "kron_oracle", None, time.perf_counter() - t0)


def closed_matrix(problem: LseProblem, weights: ConditionWeights | None = None) -> np.ndarray:
    """The k x k matrix ``C`` from dense ``(AP)^+`` and ``B_A^+``."""
    w = _weights(weights)
    ops = dense_operators(problem)
    L = w.matrix(problem.n)
    x, r = ops.x, ops.r
    APL = L.T @ ops.ap_pinv
    GL = APL @ ops.ap_pinv.T                      # L^T ((AP)^T AP)^+
    BL = L.T @ ops.ba_pinv
    wr = ops.ba_pinv.T @ (problem.A.T @ r)        # (r^T A B_A^+)^T
    xx = x @ x
    c_gg = (r @ r) / w.alpha_A**2 + (wr @ wr) / w.alpha_B**2
    c_g = xx / w.alpha_A**2 + 1.0 / w.alpha_b**2
    c_h = xx / w.alpha_B**2 + 1.0 / w.alpha_d**2
    cross = np.outer(GL @ x, BL @ wr) / w.alpha_B**2
    C = c_gg * (GL @ GL.T) + c_g * (APL @ APL.T) + c_h * (BL @ BL.T) + cross + cross.T
    return 0.5 * (C + C.T)


def cond_exact_closed(problem: LseProblem, weights: ConditionWeights | None = None) -> ConditionReport:
    t0 = time.perf_counter()
    C_norm = spectral_norm_sym(closed_matrix(problem, weights))
    return ConditionReport(float(np.sqrt(C_norm)), "closed", C_norm, time.perf_counter() - t0)


class ConditionOperator:
    """``C`` for ``L = I`` held in factored GSVD form.

    With ``Z1 = X1 diag(1/sigma)`` and ``W2 = X2 Lambda_1^{-1}``::

        C = c_gg G^2 + c_g G + c_h H + (g h^T + h g^T) / alpha_B^2
        G = Z1 Z1^T = ((AP)^T AP)^+,   H = W2 W2^T = B_A^+ (B_A^+)^T
        g = G x,   h = B_A^+ (B_A^+)^T A^T r

    ``matrix(L)`` returns ``L^T C L``; ``matvec`` and ``quadratic`` apply it
    without forming any n x n matrix.
    """

    def __init__(self, solution: LseSolution, weights: ConditionWeights | None = None):
        w = _weights(weights)
        f = solution.factors
        x, r = solution.x, solution.r
        self.n = f.n
        self.weights = w
        self.Z1 = f.X1 / f.sigma[None, :]
        self.W2 = f.X2 * f.lambda1_inv[None, :]
        self.K1 = self.Z1.T @ self.Z1
        t = f.t
        ur = f.U2[:, :t].T @ r
        ratio = f.alpha / f.beta
        rAB_norm2 = float(np.sum((ratio * ur) ** 2))
        self.g = self.Z1 @ (self.Z1.T @ x)
        self.h = f.X2[:, :t] @ (ratio / f.beta * ur)
        xx = float(x @ x)
        self.c_gg = float(r @ r) / w.alpha_A**2 + rAB_norm2 / w.alpha_B**2
        self.c_g = xx / w.alpha_A**2 + 1.0 / w.alpha_b**2
        self.c_h = xx / w.alpha_B**2 + 1.0 / w.alpha_d**2
        self.c_x = 1.0 / w.alpha_B**2

    def matrix(self, L: np.ndarray | None = None) -> np.ndarray:
        if L is None:
            L = self.weights.matrix(self.n)
        Y1 = L.T @ self.Z1
        Y2 = L.T @ self.W2
        cross = self.c_x * np.outer(L.T @ self.g, L.T @ self.h)
        C = (self.c_gg * (Y1 @ self.K1 @ Y1.T) + self.c_g * (Y1 @ Y1.T)
             + self.c_h * (Y2 @ Y2.T) + cross + cross.T)
        return 0.5 * (C + C.T)

    def apply_full(self, u: np.ndarray) -> np.ndarray:
        """``C u`` for ``L = I``."""
        z = self.Z1.T @ u
        return (self.Z1 @ (self.c_gg * (self.K1 @ z) + self.c_g * z)
                + self.c_h * (self.W2 @ (self.W2.T @ u))
                + self.c_x * (self.g * (self.h @ u) + self.h * (self.g @ u)))

    def matvec(self, v: np.ndarray, L: np.ndarray | None = None) -> np.ndarray:
        if L is None:
            L = self.weights.matrix(self.n)
        return L.T @ self.apply_full(L @ v)

    def quadratic(self, z: np.ndarray) -> float:
        """``z^T C z`` for ``L = I``, term by term."""
        Gz = self.Z1 @ (self.Z1.T @ z)
        zg = z @ Gz
        zh = self.W2.T @ z
        return float(self.c_gg * (Gz @ Gz) + self.c_g * zg + self.c_h * (zh @ zh)
                     + 2.0 * self.c_x * (self.g @ z) * (self.h @ z))


def cond_exact_gsvd(problem: LseProblem, weights: ConditionWeights | None = None,
                    solution: LseSolution | None = None) -> ConditionReport:
    t0 = time.perf_counter()
    if solution is None:
        solution = solve_lse(problem)
    C_norm = spectral_norm_sym(ConditionOperator(solution, weights).matrix())
    return ConditionReport(float(np.sqrt(C_norm)), "gsvd", C_norm, time.perf_counter() - t0)


def _lls_qr(A: np.ndarray, b: np.ndarray):
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    if m < n:
        raise RankDeficiencyError(f"A is {m}x{n}; the LLS branch needs full column rank",
                                  rank_B=0, rank_stacked=m)
    Q, R = sla.qr(A, mode="economic")
    dR = np.abs(np.diag(R))
    if n and dR.min() <= max(m, n) * np.finfo(float).eps * dR.max():
        raise RankDeficiencyError("A is not of full column rank", rank_B=0,
                                  rank_stacked=int(np.sum(dR > max(m, n) * np.finfo(float).eps * dR.max())))
    x = sla.solve_triangular(R, Q.T @ b)
    return Q, R, x, b - A @ x


def cond_lls_closed(A, b, weights: ConditionWeights | None = None) -> ConditionReport:
    """Partial condition number of ``min ||b - Ax||`` with ``A`` of full column rank.

    ``L^T (A^T A)^{-1} = L^T R^{-1} R^{-T}`` and ``L^T A^+ = L^T R^{-1} Q^T``
    come from a thin QR, so ``A^T A`` is never formed.
    """
    t0 = time.perf_counter()
    w = _weights(weights)
    b = np.asarray(b, dtype=float)
    Q, R, x, r = _lls_qr(A, b)
    L = w.matrix(R.shape[0])
    LRi = sla.solve_triangular(R, L, trans="T").T       # L^T R^{-1}
    LG = sla.solve_triangular(R, LRi.T, lower=False).T  # L^T (A^T A)^{-1}
    c_g = (x @ x) / w.alpha_A**2 + 1.0 / w.alpha_b**2
    C = (r @ r) / w.alpha_A**2 * (LG @ LG.T) + c_g * (LRi @ LRi.T)
    C_norm = spectral_norm_sym(C)
    kappa = float(np.sqrt(C_norm))
    if L.shape[1] == 1:
        scalar = cond_lls_single(A, b, L[:, 0], w)
        if abs(scalar - kappa) > 1e-8 * max(kappa, 1e-300):
            log.warning("single-column LLS forms disagree: %.17g vs %.17g", kappa, scalar)
    return ConditionReport(kappa, "lls_closed", C_norm, time.perf_counter() - t0)


def cond_lls_single(A, b, l, weights: ConditionWeights | None = None) -> float:
    """Scalar form for one column ``l``: norms of ``l^T (A^T A)^{-1}`` and ``l^T A^+``."""
    w = _weights(weights)
    A = np.asarray(A, dtype=float)
    Apinv = sla.pinv(A)
    x = Apinv @ b
    r = b - A @ x
    lG = l @ Apinv @ Apinv.T
    lAp = l @ Apinv
    return float(np.sqrt((r @ r) / w.alpha_A**2 * (lG @ lG)
                         + ((x @ x) / w.alpha_A**2 + 1.0 / w.alpha_b**2) * (lAp @ lAp)))


def cond_lls_svd(A, b, weights: ConditionWeights | None = None) -> ConditionReport:
    """``||S X^T L||_2`` from the SVD ``A = U Sigma X^T``."""
    t0 = time.perf_counter()
    w = _weights(weights)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    U, sv, Xt = sla.svd(A, full_matrices=False)
    n = A.shape[1]
    if A.shape[0] < n or sv[-1] <= max(A.shape) * np.finfo(float).eps * sv[0]:
        raise RankDeficiencyError("A is not of full column rank", rank_B=0,
                                  rank_stacked=int(np.sum(sv > max(A.shape) * np.finfo(float).eps * sv[0])))
    x = Xt.T @ ((U.T @ b) / sv)
    r = b - A @ x
    S = np.sqrt(((r @ r) / sv**2 + x @ x) / w.alpha_A**2 + 1.0 / w.alpha_b**2) / sv
    M = S[:, None] * (Xt @ w.matrix(n))
    kappa = float(sla.svdvals(M)[0]) if M.size else 0.0
    return ConditionReport(kappa, "lls_svd", kappa**2, time.perf_counter() - t0)


def cond_upper_bound(problem: LseProblem, weights: ConditionWeights | None = None,
                     solution: LseSolution | None = None) -> float:
    """Sum of the spectral norms of the four derivative blocks (``L = I``, unit weights).

    ``||M1||`` and ``||M2||`` are evaluated as square roots of
    ``||M1 M1^T||`` and ``||M2 M2^T||``, whose Kronecker-free forms hold
    because ``(AP)^+ r = 0``.
    """
    w = _weights(weights)
    if not w.is_default(problem.n):
        raise DomainError("the unstructured upper bound is defined for L = I and unit weights")
    if solution is None:
        solution = solve_lse(problem)
    f = solution.factors
    x, r = solution.x, solution.r
    ap = ap_pinv(f)
    ba = ba_pinv(f)
    G = ap @ ap.T
    wr = ba.T @ (problem.A.T @ r)
    M1sq = (r @ r) * (G @ G) + (x @ x) * G
    cross = np.outer(G @ x, ba @ wr)
    M2sq = (wr @ wr) * (G @ G) + (x @ x) * (ba @ ba.T) + cross + cross.T
    norm2 = lambda M: float(sla.svdvals(M)[0]) if M.size else 0.0  # noqa: E731
    return (np.sqrt(spectral_norm_sym(M1sq)) + np.sqrt(spectral_norm_sym(M2sq))
            + norm2(ap) + norm2(ba))
