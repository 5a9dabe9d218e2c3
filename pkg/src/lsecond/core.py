"""Equality-constrained least squares: GSVD, solution and pseudo-inverse operators.

The LSE problem is ``min ||b - A x||_2`` subject to ``B x = d`` with
``A`` of shape (m, n) and ``B`` of shape (s, n).  Everything downstream
(condition numbers, estimators) consumes the two operators

    (AP)^+      with P = I - B^+ B the projector onto null(B)
    B_A^+     = (I - (AP)^+ A) B^+

which compose the solution ``x = (AP)^+ b + B_A^+ d``.  Both are applied
through the generalized SVD ``A = U Sigma X^{-1}``, ``B = V Lambda X^{-1}``
so no explicit pseudo-inverse is ever formed on that path.  A dense
pseudo-inverse path (:func:`dense_operators`) is kept as an independent
check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import RankDeficiencyError, ShapeError

EPS = np.finfo(float).eps


def _as_matrix(M, name: str, ncols: int | None = None) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim == 1 and ncols is not None and M.size == 0:
        M = M.reshape(0, ncols)
    if M.ndim != 2:
        raise ShapeError(f"{name} must be a 2-D array, got shape {M.shape}")
    return M


def _as_vector(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim == 2 and 1 in v.shape:
        v = v.reshape(-1)
    if v.ndim != 1:
        raise ShapeError(f"{name} must be a vector, got shape {v.shape}")
    return v


@dataclass(frozen=True)
class LseProblem:
    """The data ``(A, B, b, d)``; ``B`` may have zero rows (plain LLS)."""

    A: np.ndarray
    B: np.ndarray
    b: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        A = _as_matrix(self.A, "A")
        n = A.shape[1]
        B = self.B
        if B is None:
            B = np.zeros((0, n))
        B = _as_matrix(B, "B", ncols=n)
        b = _as_vector(self.b, "b")
        d = np.zeros(0) if self.d is None else _as_vector(self.d, "d")
        if B.shape[1] != n:
            raise ShapeError(f"A has {n} columns but B has {B.shape[1]}")
        if b.shape[0] != A.shape[0]:
            raise ShapeError(f"b has length {b.shape[0]}, expected {A.shape[0]}")
        if d.shape[0] != B.shape[0]:
            raise ShapeError(f"d has length {d.shape[0]}, expected {B.shape[0]}")
        for name, val in (("A", A), ("B", B), ("b", b), ("d", d)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def s(self) -> int:
        return self.B.shape[0]

    @classmethod
    def lls(cls, A, b) -> "LseProblem":
        A = np.asarray(A, dtype=float)
        return cls(A, np.zeros((0, A.shape[1])), b, np.zeros(0))


@dataclass(frozen=True)
class ConditionWeights:
    """Weights of the data norm ``||(aA dA, aB dB, ab db, ad dd)||_F`` and the map ``L``.

    ``L=None`` means the identity, i.e. the condition number of the whole
    solution rather than of ``L^T x``.
    """

    alpha_A: float = 1.0
    alpha_B: float = 1.0
    alpha_b: float = 1.0
    alpha_d: float = 1.0
    L: np.ndarray | None = None

    def __post_init__(self):
        from .errors import DomainError

        for name in ("alpha_A", "alpha_B", "alpha_b", "alpha_d"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be strictly positive")
        if self.L is not None:
            L = np.asarray(self.L, dtype=float)
            if L.ndim == 1:
                L = L.reshape(-1, 1)
            if L.ndim != 2:
                raise ShapeError("L must be a matrix with n rows")
            L.setflags(write=False)
            object.__setattr__(self, "L", L)

    def matrix(self, n: int) -> np.ndarray:
        if self.L is None:
            return np.eye(n)
        if self.L.shape[0] != n:
            raise ShapeError(f"L has {self.L.shape[0]} rows, expected n = {n}")
        return self.L

    def is_default(self, n: int) -> bool:
        """True for L = I and unit weights, the setting of the classical bound."""
        if (self.alpha_A, self.alpha_B, self.alpha_b, self.alpha_d) != (1.0, 1.0, 1.0, 1.0):
            return False
        if self.L is None:
            return True
        return self.L.shape == (n, n) and np.array_equal(self.L, np.eye(n))

    def scaled(self, c: float) -> "ConditionWeights":
        return ConditionWeights(c * self.alpha_A, c * self.alpha_B, c * self.alpha_b,
                                c * self.alpha_d, self.L)


@dataclass(frozen=True)
class RankDiagnostic:
    rank_B: int
    rank_stacked: int
    ok: bool


def numerical_rank(M: np.ndarray, tol: float | None = None) -> int:
    if M.size == 0:
        return 0
    sv = np.linalg.svd(M, compute_uv=False)
    if tol is None:
        tol = max(M.shape) * EPS
    return int(np.sum(sv > tol * sv[0])) if sv[0] > 0 else 0


def check_assumptions(A, B, tol: float | None = None) -> RankDiagnostic:
    """Check ``rank(B) = s`` and ``rank([A; B]) = n``.

    ``tol`` is relative to the largest singular value; the default is
    ``max(rows, cols) * eps``.
    """
    A = _as_matrix(A, "A")
    B = _as_matrix(B, "B", ncols=A.shape[1])
    if A.shape[1] != B.shape[1]:
        raise ShapeError(f"A has {A.shape[1]} columns but B has {B.shape[1]}")
    s, n = B.shape
    rank_B = numerical_rank(B, tol)
    rank_stacked = numerical_rank(np.vstack([A, B]), tol)
    return RankDiagnostic(rank_B, rank_stacked, rank_B == s and rank_stacked == n)


@dataclass(frozen=True)
class GsvdFactors:
    """``A = U Sigma X^{-1}``, ``B = V Lambda X^{-1}``.

    ``Sigma = [[I_{n-s}, 0, 0], [0, S_A, 0], [0, 0, 0]]`` and
    ``Lambda = [[0, S_B, 0], [0, 0, I_{s-t}]]`` with ``S_A = diag(alpha)``,
    ``S_B = diag(beta)``.  When ``s = 0`` the leading block holds the
    singular values of ``A`` (``sigma``) and ``X`` is orthogonal; otherwise
    ``sigma`` is all ones.
    """

    U: np.ndarray
    V: np.ndarray
    X: np.ndarray
    Xinv: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    sigma: np.ndarray
    m: int
    n: int
    s: int
    t: int

    @property
    def X1(self) -> np.ndarray:
        return self.X[:, : self.n - self.s]

    @property
    def X2(self) -> np.ndarray:
        return self.X[:, self.n - self.s:]

    @property
    def U1(self) -> np.ndarray:
        return self.U[:, : self.n - self.s]

    @property
    def U2(self) -> np.ndarray:
        return self.U[:, self.n - self.s:]

    @property
    def lambda1_inv(self) -> np.ndarray:
        """Diagonal of ``Lambda_1^{-1} = diag(S_B^{-1}, I_{s-t})``."""
        return np.concatenate([1.0 / self.beta, np.ones(self.s - self.t)])

    def Sigma(self) -> np.ndarray:
        k = self.n - self.s
        S = np.zeros((self.m, self.n))
        S[np.arange(k), np.arange(k)] = self.sigma
        idx = np.arange(k, k + self.t)
        S[idx, idx] = self.alpha
        return S

    def Lambda(self) -> np.ndarray:
        k = self.n - self.s
        L = np.zeros((self.s, self.n))
        L[np.arange(self.t), k + np.arange(self.t)] = self.beta
        rest = np.arange(self.t, self.s)
        L[rest, k + rest] = 1.0
        return L


def gsvd(A, B, tol: float | None = None) -> GsvdFactors:
    """Generalized SVD of the pair ``(A, B)`` in the block layout above.

    Computed from a QR factorization of the stacked matrix ``[A; B] = Q R``
    followed by the CS decomposition of ``Q`` (LAPACK ``dorcsd``).
    ``t = rank(A) + s - n`` is read off the cosines, with cosines below
    ``tol`` (default ``max(m + s, n) * eps``) counted as zero.
    """
    A = _as_matrix(A, "A")
    B = _as_matrix(B, "B", ncols=A.shape[1])
    diag = check_assumptions(A, B)
    if not diag.ok:
        raise RankDeficiencyError(
            f"assumptions violated: rank(B) = {diag.rank_B} (need {B.shape[0]}), "
            f"rank([A; B]) = {diag.rank_stacked} (need {A.shape[1]})",
            rank_B=diag.rank_B, rank_stacked=diag.rank_stacked)
    m, n = A.shape
    s = B.shape[0]
    if tol is None:
        tol = max(m + s, n) * EPS

    if s == 0:
        U, sv, Vt = sla.svd(A, full_matrices=True)
        return GsvdFactors(U=U, V=np.zeros((0, 0)), X=Vt.T.copy(), Xinv=Vt, alpha=np.zeros(0),
                           beta=np.zeros(0), sigma=sv, m=m, n=n, s=0, t=0)

    if m + s == n:
        # [A; B] is square and nonsingular: X^{-1} = [A; B], t = 0.
        M = np.vstack([A, B])
        return GsvdFactors(U=np.eye(m), V=np.eye(s), X=sla.inv(M), Xinv=M, alpha=np.zeros(0),
                           beta=np.zeros(0), sigma=np.ones(n - s), m=m, n=n, s=s, t=0)

    Q, R = sla.qr(np.vstack([A, B]))
    R1 = R[:n]
    u, cs, vdh = sla.cossin(Q, p=m, q=n)
    u1 = u[:m, :m].copy()
    u2 = u[m:, m:].copy()
    Cb = cs[:m, :n]
    Sb = cs[m:, :n]
    ic = np.argmax(np.abs(Cb), axis=0)
    isn = np.argmax(np.abs(Sb), axis=0)
    cols = np.arange(n)
    c = np.abs(Cb[ic, cols])
    sn = np.abs(Sb[isn, cols])
    # Make the paired cosine/sine entries positive by flipping U/V columns.
    for j in range(n):
        if c[j] > 0 and Cb[ic[j], j] < 0:
            u1[:, ic[j]] *= -1
        if sn[j] > 0 and Sb[isn[j], j] < 0:
            u2[:, isn[j]] *= -1

    by_sine = np.argsort(sn, kind="stable")
    first = np.sort(by_sine[: n - s])
    rest = np.sort(by_sine[n - s:])
    middle = rest[c[rest] > tol]
    anull = rest[c[rest] <= tol]
    t = len(middle)
    order = np.concatenate([first, middle, anull]).astype(int)
    scale = np.concatenate([c[first], np.ones(t), sn[anull]])

    used = list(ic[first]) + list(ic[middle])
    unused = [i for i in range(m) if i not in set(used)]
    U = u1[:, used + unused]
    V = u2[:, list(isn[middle]) + list(isn[anull])]
    W = vdh[:n, :n].T[:, order]
    Xinv = scale[:, None] * (W.T @ R1)
    X = sla.solve_triangular(R1, W) / scale[None, :]
    return GsvdFactors(U=U, V=V, X=X, Xinv=Xinv, alpha=c[middle], beta=sn[middle],
                       sigma=np.ones(n - s), m=m, n=n, s=s, t=t)


def null_projector(B, n: int | None = None, tol: float | None = None) -> np.ndarray:
    """Orthogonal projector ``P = I - B^+ B`` onto ``null(B)``."""
    B = np.asarray(B, dtype=float)
    if n is None:
        n = B.shape[1]
    if B.size == 0:
        return np.eye(n)
    _, sv, Vt = sla.svd(B)
    if tol is None:
        tol = max(B.shape) * EPS
    r = int(np.sum(sv > tol * sv[0])) if sv[0] > 0 else 0
    Z = Vt[r:].T
    return Z @ Z.T


def apply_ap_pinv(factors: GsvdFactors, y) -> np.ndarray:
    """``(AP)^+ y = X_1 diag(1/sigma) U_1^T y``."""
    y = np.asarray(y, dtype=float)
    return factors.X1 @ ((factors.U1.T @ y) / _col(factors.sigma, y))


def ap_pinv(factors: GsvdFactors) -> np.ndarray:
    return factors.X1 @ (factors.U1.T / factors.sigma[:, None])


def apply_ba_pinv(factors: GsvdFactors, y) -> np.ndarray:
    """``B_A^+ y = X Lambda^+ V^T y = X_2 Lambda_1^{-1} V^T y``."""
    y = np.asarray(y, dtype=float)
    return factors.X2 @ (_col(factors.lambda1_inv, y) * (factors.V.T @ y))


def ba_pinv(factors: GsvdFactors) -> np.ndarray:
    return factors.X2 @ (factors.lambda1_inv[:, None] * factors.V.T)


def _col(v: np.ndarray, like: np.ndarray) -> np.ndarray:
    return v[:, None] if like.ndim == 2 else v


@dataclass(frozen=True)
class LseSolution:
    x: np.ndarray
    r: np.ndarray
    factors: GsvdFactors = field(repr=False)


def solve_lse(problem: LseProblem, factors: GsvdFactors | None = None) -> LseSolution:
    """Unique solution ``x = (AP)^+ b + B_A^+ d`` and residual ``r = b - A x``."""
    if factors is None:
        factors = gsvd(problem.A, problem.B)
    x = apply_ap_pinv(factors, problem.b)
    if problem.s:
        x = x + apply_ba_pinv(factors, problem.d)
    r = problem.b - problem.A @ x
    return LseSolution(x=x, r=r, factors=factors)


@dataclass(frozen=True)
class DenseOperators:
    """Explicit ``(AP)^+``, ``B_A^+`` and the solution they produce."""

    ap_pinv: np.ndarray
    ba_pinv: np.ndarray
    x: np.ndarray
    r: np.ndarray


def dense_operators(problem: LseProblem) -> DenseOperators:
    """Pseudo-inverse operators from dense SVDs, independent of :func:`gsvd`.

    ``AP`` has rank exactly ``n - s`` under the uniqueness assumptions, so
    its pseudo-inverse keeps that many singular triplets.
    """
    A, B = problem.A, problem.B
    n, s = problem.n, problem.s
    P = null_projector(B, n)
    U, sv, Vt = sla.svd(A @ P, full_matrices=False)
    k = n - s
    ap = (Vt[:k].T / sv[:k]) @ U[:, :k].T
    if s:
        ba = (np.eye(n) - ap @ A) @ sla.pinv(B)
    else:
        ba = np.zeros((n, 0))
    x = ap @ problem.b + ba @ problem.d
    return DenseOperators(ap_pinv=ap, ba_pinv=ba, x=x, r=problem.b - A @ x)
