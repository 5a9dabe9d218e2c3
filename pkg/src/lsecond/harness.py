"""Seeded test-problem generators and the experiment runners.

Every trial draws from its own generator stream ``default_rng([seed, *ids])``
so results do not depend on execution order or thread count.
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .condition import cond_exact_gsvd
from .core import ConditionWeights, LseProblem, check_assumptions, null_projector, solve_lse
from .errors import GeneratorError, RankDeficiencyError
from .estimators import estimate_condition_pce, ssce_estimate
from .structured import build_structure, cond_structured, StructureKind, StructureSpec


@dataclass(frozen=True)
class PaigeConfig:
    m: int = 100
    n: int = 80
    s: int = 50
    l1: float = 0.0
    l2: float = 0.0
    rnorm: float = 1.0
    seed: int | tuple = 0

    def __post_init__(self):
        if not (self.m >= self.n >= self.s >= 1):
            raise ValueError(f"need m >= n >= s >= 1, got {self.m}, {self.n}, {self.s}")
        if self.rnorm < 0 or self.l1 < 0 or self.l2 < 0:
            raise ValueError("rnorm, l1 and l2 must be nonnegative")


@dataclass(frozen=True)
class GeneratedProblem:
    problem: LseProblem
    x: np.ndarray
    r: np.ndarray


@dataclass(frozen=True)
class ExperimentStats:
    mean: float
    variance: float
    samples: int
    quantiles: tuple[float, float, float]

    @classmethod
    def of(cls, values) -> "ExperimentStats":
        v = np.asarray(values, dtype=float)
        var = float(np.var(v, ddof=1)) if v.size > 1 else 0.0
        return cls(float(v.mean()), var, int(v.size),
                   (float(v.min()), float(np.median(v)), float(v.max())))


def _rng(seed, *ids) -> np.random.Generator:
    base = list(seed) if isinstance(seed, (tuple, list)) else [int(seed)]
    return np.random.default_rng(base + [int(i) for i in ids])


def _householder(u: np.ndarray) -> np.ndarray:
    return np.eye(len(u)) - 2.0 * np.outer(u, u)


def _unit(rng: np.random.Generator, k: int) -> np.ndarray:
    u = rng.standard_normal(k)
    return u / np.linalg.norm(u)


def planted_solution(n: int) -> np.ndarray:
    return np.arange(1, n + 1, dtype=float) ** 2


def residual_for(A: np.ndarray, B: np.ndarray, rnorm: float, rng: np.random.Generator) -> np.ndarray:
    """Random residual of norm ``rnorm`` orthogonal to ``range(AP)``.

    That makes the planted ``x`` the exact LSE solution of ``b = Ax + r``.
    """
    m, n = A.shape
    r = rng.standard_normal(m)
    AP = A @ null_projector(B, n)
    k = n - B.shape[0]
    if k > 0:
        # range(AP) has dimension n - s under the uniqueness assumptions
        U, _, _ = sla.svd(AP, full_matrices=False)
        Q = U[:, :k]
        r = r - Q @ (Q.T @ r)
    nr = np.linalg.norm(r)
    return r * (rnorm / nr) if nr > 0 else r


def gen_paige(cfg: PaigeConfig) -> GeneratedProblem:
    """``A = U1 [D1; 0] V1``, ``B = U2 [D2, 0] V2`` with Householder ``U_i``, ``V_i``.

    ``kappa(A) = n^l1`` and ``kappa(B) = s^l2``; ``x = (1, 4, ..., n^2)``.
    """
    m, n, s = cfg.m, cfg.n, cfg.s
    rng = _rng(cfg.seed)
    U1 = _householder(_unit(rng, m))
    U2 = _householder(_unit(rng, s))
    V1 = _householder(_unit(rng, n))
    V2 = _householder(_unit(rng, n))
    D1 = np.arange(n, 0, -1, dtype=float) ** cfg.l1 / float(n) ** cfg.l1
    D2 = np.arange(s, 0, -1, dtype=float) ** cfg.l2 / float(s) ** cfg.l2
    A = U1[:, :n] @ (D1[:, None] * V1)
    B = U2 @ (D2[:, None] * V2[:s])
    x = planted_solution(n)
    r = residual_for(A, B, cfg.rnorm, rng)
    return GeneratedProblem(LseProblem(A, B, A @ x + r, B @ x), x, r)


def gen_toeplitz_pair(n: int, rnorm: float = 1.0, seed=0, max_redraws: int = 10) -> GeneratedProblem:
    """Square Gaussian Toeplitz ``A`` and ``B`` (2n - 1 parameters each)."""
    if n < 2:
        raise ValueError("n must be at least 2")
    for sub in range(max_redraws + 1):
        rng = _rng(seed, sub)
        a = rng.standard_normal(2 * n - 1)
        bb = rng.standard_normal(2 * n - 1)
        # parameters ordered bottom-left to top-right, as in the structure module
        A = sla.toeplitz(a[n - 1::-1], a[n - 1:])
        B = sla.toeplitz(bb[n - 1::-1], bb[n - 1:])
        if check_assumptions(A, B).ok:
            x = planted_solution(n)
            r = residual_for(A, B, rnorm, rng)
            return GeneratedProblem(LseProblem(A, B, A @ x + r, B @ x), x, r)
    raise GeneratorError(f"no admissible Toeplitz pair after {max_redraws} redraws")


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("LSE_COND_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    items = list(items)
    nt = _threads()
    if nt == 1 or len(items) < 2:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=nt) as pool:
        return list(pool.map(fn, items))


def table1_trial(cfg: PaigeConfig, eps: float = 1e-3, delta: float = 1e-2, q: int = 2,
                 est_seed=0) -> tuple[float, float]:
    """``(r_ssce, r_pce)`` for one generated problem."""
    gp = gen_paige(cfg)
    sol = solve_lse(gp.problem)
    kappa = cond_exact_gsvd(gp.problem, solution=sol).kappa
    seeds = np.random.SeedSequence(est_seed).spawn(2)
    ssce = ssce_estimate(gp.problem, q=q, rng_seed=np.random.default_rng(seeds[0]), solution=sol)
    pce = estimate_condition_pce(gp.problem, eps=eps, delta=delta,
                                 rng_seed=np.random.default_rng(seeds[1]), solution=sol)
    return ssce.kappa_hat / kappa, pce.kappa_hat / kappa


def run_table1_cell(l1: float, l2: float, rnorm: float, trials: int, seed: int = 0,
                    m: int = 100, n: int = 80, s: int = 50, eps: float = 1e-3,
                    delta: float = 1e-2, q: int = 2, cell: int = 0):
    def one(t):
        cfg = PaigeConfig(m, n, s, l1, l2, rnorm, seed=(seed, cell, t, 0))
        return table1_trial(cfg, eps, delta, q, est_seed=[seed, cell, t, 1])

    ratios = np.array(_map(one, range(trials)))
    return ratios[:, 0], ratios[:, 1]


def run_table1(ls=(0, 3, 5), rnorms=(1e-4, 1.0, 1e4), trials: int = 500, seed: int = 0,
               m: int = 100, n: int = 80, s: int = 50, eps: float = 1e-3, delta: float = 1e-2,
               q: int = 2) -> list[dict]:
    """Mean and variance of ``r_ssce`` and ``r_pce`` for every ``(rnorm, l1, l2)`` cell."""
    rows = []
    cell = 0
    for rnorm in rnorms:
        for l1 in ls:
            for l2 in ls:
                r_ssce, r_pce = run_table1_cell(l1, l2, rnorm, trials, seed, m, n, s, eps, delta,
                                                q, cell)
                for name, vals in (("ssce", r_ssce), ("pce", r_pce)):
                    st = ExperimentStats.of(vals)
                    rows.append({"l1": l1, "l2": l2, "rnorm": rnorm, "estimator": name,
                                 "mean": st.mean, "variance": st.variance, "stats": st})
                cell += 1
    return rows


def toeplitz_ratio(n: int, rnorm: float, seed) -> float:
    """``kappa / kappa_S`` for one Gaussian Toeplitz pair."""
    gp = gen_toeplitz_pair(n, rnorm, seed)
    sol = solve_lse(gp.problem)
    kappa = cond_exact_gsvd(gp.problem, solution=sol).kappa
    SA = build_structure(StructureSpec(StructureKind.TOEPLITZ, n, n))
    kappa_s = cond_structured(gp.problem, ConditionWeights(), SA, SA, solution=sol).kappa
    return kappa / kappa_s


def run_ratio_experiment(n: int = 100, rnorms=(1e-4, 1.0, 1e4), trials: int = 200,
                         seed: int = 0) -> list[dict]:
    rows = []
    for ri, rnorm in enumerate(rnorms):
        ratios = _map(lambda t: toeplitz_ratio(n, rnorm, (seed, n, ri, t)), range(trials))
        rows.extend({"trial": t, "rnorm": rnorm, "ratio": v} for t, v in enumerate(ratios))
    return rows


def run_dimension_sweep(sizes=tuple(range(10, 211, 20)), trials: int = 50, rnorm: float = 1.0,
                        seed: int = 0) -> list[dict]:
    rows = []
    for n in sizes:
        ratios = _map(lambda t: toeplitz_ratio(n, rnorm, (seed, n, 0, t)), range(trials))
        st = ExperimentStats.of(ratios)
        rows.append({"n": n, "mean": st.mean, "variance": st.variance, "stats": st})
    return rows


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


TABLE1_COLUMNS = ["l1", "l2", "rnorm", "estimator", "mean", "variance"]
RATIO_COLUMNS = ["trial", "rnorm", "ratio"]
DIMSWEEP_COLUMNS = ["n", "mean", "variance"]
