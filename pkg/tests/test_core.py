import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from conftest import random_problem, random_shape
from lsecond import (ConditionWeights, DomainError, LseProblem, RankDeficiencyError, ShapeError,
                     check_assumptions, gsvd, null_projector, solve_lse)
from lsecond.core import ap_pinv, apply_ap_pinv, ba_pinv, dense_operators


def test_check_assumptions_examples():
    assert check_assumptions(np.eye(2), np.array([[1.0, 0.0]])).ok
    diag = check_assumptions(np.array([[1.0, 0], [0, 0]]), np.zeros((1, 2)))
    assert not diag.ok and diag.rank_B == 0
    rng = np.random.default_rng(1)
    assert check_assumptions(rng.standard_normal((100, 80)), rng.standard_normal((50, 80))).ok


def test_check_assumptions_shape_mismatch():
    with pytest.raises(ShapeError):
        check_assumptions(np.eye(2), np.ones((1, 3)))


def test_gsvd_identity_pair():
    f = gsvd(np.eye(2), np.array([[0.0, 1.0]]))
    assert f.t == 1
    np.testing.assert_allclose(f.alpha**2 + f.beta**2, 1.0)
    np.testing.assert_allclose(f.U @ f.Sigma() @ f.Xinv, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(f.V @ f.Lambda() @ f.Xinv, [[0.0, 1.0]], atol=1e-14)


def _check_factors(A, B, f, tol=1e-12):
    nA = max(np.linalg.norm(A), 1.0)
    assert np.linalg.norm(A - f.U @ f.Sigma() @ f.Xinv) <= tol * nA
    if B.shape[0]:
        assert np.linalg.norm(B - f.V @ f.Lambda() @ f.Xinv) <= tol * np.linalg.norm(B)
        np.testing.assert_allclose(f.V.T @ f.V, np.eye(B.shape[0]), atol=1e-12)
    np.testing.assert_allclose(f.U.T @ f.U, np.eye(A.shape[0]), atol=1e-12)
    np.testing.assert_allclose(f.X @ f.Xinv, np.eye(A.shape[1]), atol=1e-10)
    np.testing.assert_allclose(f.alpha**2 + f.beta**2, 1.0, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_gsvd_reconstruction_property(seed):
    rng = np.random.default_rng(seed)
    m, n, s = random_shape(rng)
    p = random_problem(rng, m, n, s)
    _check_factors(p.A, p.B, gsvd(p.A, p.B))


def test_gsvd_rank_deficient_A():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 5))  # rank 2
    B = rng.standard_normal((3, 5))
    f = gsvd(A, B)
    assert f.t == 2 + 3 - 5
    _check_factors(A, B, f)


def test_gsvd_square_stack_branch():
    rng = np.random.default_rng(4)
    A, B = rng.standard_normal((3, 5)), rng.standard_normal((2, 5))
    f = gsvd(A, B)
    _check_factors(A, B, f)


def test_gsvd_full_scale():
    from lsecond.harness import PaigeConfig, gen_paige

    gp = gen_paige(PaigeConfig(l1=3, l2=3, seed=0))
    A, B = gp.problem.A, gp.problem.B
    f = gsvd(A, B)
    assert np.linalg.norm(A - f.U @ f.Sigma() @ f.Xinv) / np.linalg.norm(A) <= 1e-12


def test_gsvd_rejects_rank_deficient_B():
    with pytest.raises(RankDeficiencyError) as ei:
        gsvd(np.eye(2), np.array([[1.0, 0.0], [2.0, 0.0]]))
    assert ei.value.rank_B == 1


def test_null_projector_examples():
    np.testing.assert_allclose(null_projector(np.array([[1.0, 0.0]])), np.diag([0.0, 1.0]), atol=1e-15)
    np.testing.assert_allclose(null_projector(np.zeros((0, 3)), 3), np.eye(3))
    rng = np.random.default_rng(0)
    B = rng.standard_normal((50, 80))
    P = null_projector(B)
    assert np.linalg.norm(B @ P) <= 1e-12 * np.linalg.norm(B)
    np.testing.assert_allclose(P @ P, P, atol=1e-12)


def test_solve_identity_fixture(identity_problem):
    sol = solve_lse(identity_problem)
    np.testing.assert_allclose(sol.x, [7.0, 4.0], atol=1e-14)
    np.testing.assert_allclose(sol.r, [-4.0, 0.0], atol=1e-14)


def test_solve_lls_reduction():
    rng = np.random.default_rng(5)
    A, b = rng.standard_normal((9, 4)), rng.standard_normal(9)
    sol = solve_lse(LseProblem.lls(A, b))
    np.testing.assert_allclose(sol.x, np.linalg.pinv(A) @ b, rtol=1e-12)


def test_ap_pinv_identity_no_constraints():
    f = gsvd(np.eye(3), np.zeros((0, 3)))
    np.testing.assert_allclose(ap_pinv(f), np.eye(3), atol=1e-15)
    assert ba_pinv(f).shape == (3, 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_operators_match_dense_oracles(seed):
    rng = np.random.default_rng(seed)
    m, n, s = random_shape(rng)
    p = random_problem(rng, m, n, s)
    f = gsvd(p.A, p.B)
    P = null_projector(p.B, n)
    ap = ap_pinv(f)
    ap_dense = np.linalg.pinv(p.A @ P, rcond=1e-10)
    np.testing.assert_allclose(ap, ap_dense, atol=1e-9 * max(1, np.abs(ap_dense).max()))
    ba = ba_pinv(f)
    ba_dense = (np.eye(n) - ap_dense @ p.A) @ np.linalg.pinv(p.B) if s else np.zeros((n, 0))
    np.testing.assert_allclose(ba, ba_dense, atol=1e-9 * max(1, np.abs(ba_dense).max() if s else 1))
    # B_A^+ B + (AP)^+ A = I_n and (AP)^+ r = 0
    np.testing.assert_allclose(ba @ p.B + ap @ p.A, np.eye(n), atol=1e-10)
    sol = solve_lse(p, f)
    assert np.linalg.norm(apply_ap_pinv(f, sol.r)) <= 1e-10 * max(1, np.linalg.norm(p.b))
    if s:
        np.testing.assert_allclose(p.B @ sol.x, p.d, atol=1e-10 * max(1, np.linalg.norm(p.d)))
    ops = dense_operators(p)
    np.testing.assert_allclose(sol.x, ops.x, atol=1e-9 * max(1, np.linalg.norm(ops.x)))


def test_problem_validation():
    with pytest.raises(ShapeError):
        LseProblem(np.eye(2), np.ones((1, 2)), np.ones(3), np.ones(1))
    with pytest.raises(ShapeError):
        LseProblem(np.eye(2), np.ones((1, 2)), np.ones(2), np.ones(2))
    p = LseProblem(np.eye(2), None, np.ones(2), None)
    assert p.s == 0
    assert not p.A.flags.writeable


def test_weights_validation():
    with pytest.raises(DomainError):
        ConditionWeights(alpha_A=0.0)
    with pytest.raises(ShapeError):
        ConditionWeights(L=np.eye(3)).matrix(2)
    w = ConditionWeights(L=np.array([1.0, 0.0]))
    assert w.matrix(2).shape == (2, 1)
    assert ConditionWeights().is_default(4)
    assert not ConditionWeights(alpha_b=2.0).is_default(4)


def test_solution_orthogonal_invariance():
    rng = np.random.default_rng(9)
    p = random_problem(rng, 7, 4, 2)
    Q = sla.qr(rng.standard_normal((7, 7)))[0]
    x1 = solve_lse(p).x
    x2 = solve_lse(LseProblem(Q @ p.A, p.B, Q @ p.b, p.d)).x
    np.testing.assert_allclose(x1, x2, rtol=1e-10)
