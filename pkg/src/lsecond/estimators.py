"""Statistical estimates of the partial condition number.

``pce_estimate`` brackets ``||C||_2`` of a symmetric positive semidefinite
operator in ``[alpha1, alpha2]``.  ``alpha1`` is the largest Ritz value of a
Lanczos process (a guaranteed lower bound).  ``alpha2`` is an upper bound
holding with probability at least ``1 - eps`` over the random unit start
vector ``v0``.  Writing ``chi_j`` for the characteristic polynomial of the
Lanczos tridiagonal after ``j`` steps, ``chi_j(C) v0`` has norm
``beta_1 ... beta_j``.  Its component along the top eigenvector is
``gamma_1 chi_j(lambda_max)``, and ``|gamma_1| > delta_eps`` except with
probability ``eps``.  Hence ``chi_j(lambda_max) <= beta_1...beta_j / delta_eps``,
and ``alpha2`` is the root of that equation to the right of the largest Ritz
value.

``ssce_estimate`` averages directional condition numbers over ``q``
random orthonormal directions and rescales by Wallis factors.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import brentq
from scipy.sparse.linalg import LinearOperator, aslinearoperator
from scipy.special import betaincinv

from .condition import ConditionOperator
from .core import ConditionWeights, LseProblem, LseSolution, solve_lse
from .errors import DomainError


def wallis(q: int, mode: str = "exact") -> float:
    """Wallis factor ``omega_q``; ``mode="approx"`` uses ``sqrt(2 / (pi (q - 1/2)))``."""
    if int(q) != q or q < 1:
        raise DomainError(f"Wallis factor needs a positive integer, got {q!r}")
    q = int(q)
    if mode == "approx":
        return math.sqrt(2.0 / (math.pi * (q - 0.5)))
    if mode != "exact":
        raise DomainError(f"unknown Wallis mode {mode!r}")
    if q == 1:
        return 1.0
    if q == 2:
        return 2.0 / math.pi
    # odd:  1*3*...*(q-2) / (2*4*...*(q-1));  even: (2/pi) 2*4*...*(q-2) / (3*5*...*(q-1))
    w = 1.0 if q % 2 else 2.0 / math.pi
    for num in range(1 if q % 2 else 2, q - 1, 2):
        w *= num / (num + 1)
    return w


@dataclass
class PceReport:
    alpha1: float
    alpha2: float
    kappa_hat: float
    eps: float
    delta: float
    iterations: int
    converged: bool
    seed: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SsceReport:
    q: int
    kappa_i_sq: np.ndarray
    kappa_hat: float
    wallis_q: float
    wallis_n: float
    seed: int | None = None
    elapsed: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kappa_i_sq"] = [float(v) for v in self.kappa_i_sq]
        d.pop("elapsed")
        d["elapsed_ms"] = 1e3 * self.elapsed
        return d


def start_component_bound(dim: int, eps: float) -> float:
    """``delta_eps`` with ``P(|v0 . e| <= delta_eps) = eps`` for ``v0`` uniform on the sphere.

    ``(v0 . e)^2`` follows ``Beta(1/2, (dim - 1)/2)``.
    """
    if dim <= 1:
        return 1.0
    return math.sqrt(float(betaincinv(0.5, 0.5 * (dim - 1), eps)))


def _upper_root(theta: np.ndarray, log_target: float) -> float:
    """Root ``t > max(theta)`` of ``sum(log(t - theta)) = log_target``."""
    top = theta.max()
    gaps = top - theta

    def f(u):
        return float(np.sum(np.log(np.exp(u) + gaps))) - log_target

    hi = log_target / len(theta) + 1.0
    while f(hi) < 0:
        hi += 10.0
    lo = hi - 10.0
    while f(lo) > 0:
        lo -= 10.0
    u = brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
    return top + math.exp(u)


def pce_estimate(op_C, eps: float = 1e-3, delta: float = 1e-2, rng_seed=None,
                 max_dim: int | None = None) -> PceReport:
    """Probabilistic interval for ``||C||_2`` of a symmetric PSD operator.

    ``op_C`` is a square array or anything ``aslinearoperator`` accepts.
    Lanczos runs with full reorthogonalization until ``alpha2 / alpha1 <= 1 + delta``,
    breakdown, or ``max_dim`` steps (default ``min(2 dim, 200)``).
    """
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0, 1)")
    if not delta > 0:
        raise DomainError("delta must be positive")
    op = aslinearoperator(op_C) if not isinstance(op_C, LinearOperator) else op_C
    N = op.shape[0]
    if op.shape != (N, N):
        raise DomainError(f"operator must be square, got {op.shape}")
    if N == 0:
        return PceReport(0.0, 0.0, 0.0, eps, delta, 0, True, _seed_int(rng_seed))
    if max_dim is None:
        max_dim = min(2 * N, 200)
    rng = np.random.default_rng(rng_seed)
    v = rng.standard_normal(N)
    v /= np.linalg.norm(v)
    log_delta_eps = math.log(start_component_bound(N, eps))

    Vs = [v]
    alphas: list[float] = []
    betas: list[float] = []
    log_beta_sum = 0.0
    alpha1 = alpha2 = 0.0
    converged = False
    steps = 0
    for steps in range(1, min(max_dim, N) + 1):
        w = np.asarray(op.matvec(Vs[-1]), dtype=float).reshape(-1)
        a = float(Vs[-1] @ w)
        alphas.append(a)
        V = np.array(Vs).T
        w = w - V @ (V.T @ w)
        w = w - V @ (V.T @ w)
        beta = float(np.linalg.norm(w))
        theta = sla.eigvalsh_tridiagonal(np.array(alphas), np.array(betas)) if betas else np.array(alphas)
        alpha1 = max(alpha1, float(theta[-1]), 0.0)
        scale = max(abs(theta).max(), np.finfo(float).tiny)
        if beta <= 10 * N * np.finfo(float).eps * scale or steps == N:
            # invariant subspace: the Ritz values are eigenvalues
            alpha2 = alpha1
            converged = True
            break
        log_beta_sum += math.log(beta)
        alpha2 = max(_upper_root(theta, log_beta_sum - log_delta_eps), alpha1)
        if alpha2 <= (1.0 + delta) * alpha1:
            converged = True
            break
        betas.append(beta)
        Vs.append(w / beta)
    kappa_hat = math.sqrt(0.5 * (alpha1 + alpha2))
    return PceReport(alpha1, alpha2, kappa_hat, eps, delta, steps, converged, _seed_int(rng_seed))


def _seed_int(seed):
    return seed if isinstance(seed, int) else None


def condition_operator(problem: LseProblem, weights: ConditionWeights | None = None,
                       solution: LseSolution | None = None, materialize: bool | None = None):
    """``C`` as a dense k x k matrix (small k) or a matrix-free ``LinearOperator``."""
    if solution is None:
        solution = solve_lse(problem)
    w = weights if weights is not None else ConditionWeights()
    cop = ConditionOperator(solution, w)
    L = w.matrix(problem.n)
    k = L.shape[1]
    if materialize is None:
        materialize = k <= 400
    if materialize:
        return cop.matrix(L)
    return LinearOperator((k, k), matvec=lambda v: cop.matvec(np.ravel(v), L), dtype=float)


def estimate_condition_pce(problem: LseProblem, weights: ConditionWeights | None = None,
                           eps: float = 1e-3, delta: float = 1e-2, rng_seed=None,
                           structure: tuple | None = None, materialize: bool | None = None,
                           solution: LseSolution | None = None) -> PceReport:
    """Interval estimate of the (optionally structured) partial condition number.

    ``structure=(spec_A, spec_B)`` switches to ``C = M_s M_s^T`` with ``M_s``
    the structured derivative.
    """
    if structure is not None:
        from .structured import _spec_for, structured_derivative

        SA = _spec_for(structure[0], problem.m, problem.n)
        SB = _spec_for(structure[1], problem.s, problem.n)
        Ms = structured_derivative(problem, weights, SA, SB, solution)
        if materialize is False:
            op = LinearOperator((Ms.shape[0],) * 2, matvec=lambda v: Ms @ (Ms.T @ np.ravel(v)),
                                dtype=float)
        else:
            op = Ms @ Ms.T
    else:
        op = condition_operator(problem, weights, solution, materialize)
    return pce_estimate(op, eps, delta, rng_seed)


def kappa_dir_sq(problem: LseProblem, weights: ConditionWeights | None, z,
                 solution: LseSolution | None = None, tol: float = 1e-10) -> float:
    """Squared condition number of ``z^T x`` for a unit vector ``z``."""
    z = np.asarray(z, dtype=float)
    if z.shape != (problem.n,) or abs(np.linalg.norm(z) - 1.0) > tol:
        raise DomainError("z must be a unit vector of length n")
    if solution is None:
        solution = solve_lse(problem)
    w = ConditionWeights() if weights is None else weights
    return ConditionOperator(solution, ConditionWeights(w.alpha_A, w.alpha_B, w.alpha_b,
                                                        w.alpha_d)).quadratic(z)


def orthonormal_directions(n: int, q: int, rng: np.random.Generator) -> np.ndarray:
    """``q`` orthonormal columns from QR of a Gaussian matrix, signs fixed by ``diag(R) > 0``."""
    Z = rng.standard_normal((n, q))
    Q, R = np.linalg.qr(Z)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs[None, :]


def ssce_estimate(problem: LseProblem, weights: ConditionWeights | None = None, q: int = 2,
                  rng_seed=None, wallis_mode: str = "approx",
                  solution: LseSolution | None = None) -> SsceReport:
    """Small-sample statistical estimate of the condition number of the full solution."""
    t0 = time.perf_counter()
    n = problem.n
    w = ConditionWeights() if weights is None else weights
    if w.L is not None and not (w.L.shape == (n, n) and np.array_equal(w.L, np.eye(n))):
        raise DomainError("SSCE estimates the condition number of the whole solution (L = I)")
    if not 1 <= q <= n:
        raise DomainError(f"need 1 <= q <= n = {n}, got q = {q}")
    if solution is None:
        solution = solve_lse(problem)
    cop = ConditionOperator(solution, w)
    Z = orthonormal_directions(n, q, np.random.default_rng(rng_seed))
    ksq = np.array([cop.quadratic(Z[:, i]) for i in range(q)])
    wq, wn = wallis(q, wallis_mode), wallis(n, wallis_mode)
    kappa_hat = wq / wn * math.sqrt(max(float(ksq.sum()), 0.0))
    return SsceReport(q, ksq, kappa_hat, wq, wn, _seed_int(rng_seed), time.perf_counter() - t0)
