import numpy as np
import pytest

from lpirls.linsys import solve_general_structured, solve_weighted_ls
from lpirls.numerics import dual_exponent, lp_norm
from lpirls.reductions import (
    GeneralInstance,
    lift_general,
    solve_lifted,
    solve_small_p,
    solve_small_p_residual,
)
from oracles import golden_affine, lp_min_residual, weighted_ls_kkt


def test_lift_shapes_and_feasibility():
    rng = np.random.default_rng(0)
    N, v = rng.standard_normal((5, 3)), rng.standard_normal(5)
    A, b = rng.standard_normal((1, 3)), rng.standard_normal(1)
    lifted = lift_general(GeneralInstance(N, v, A, b, p=4.0))
    assert lifted.A.shape == (6, 8) and lifted.n_free == 3
    x = np.linalg.lstsq(A, b, rcond=None)[0]
    u = np.concatenate([x, N @ x - v])
    np.testing.assert_allclose(lifted.A @ u, lifted.b, atol=1e-12)
    np.testing.assert_allclose(lifted.project(u), x)
    np.testing.assert_allclose(lifted.penalised(u), N @ x - v)


def test_lift_identity_zero_optimum():
    lifted = lift_general(GeneralInstance(np.eye(3), np.zeros(3), p=4.0))
    x, _ = solve_lifted(lifted, 1e-8)
    np.testing.assert_allclose(x, 0, atol=1e-12)


def test_lift_overdetermined_least_squares():
    lifted = lift_general(GeneralInstance([[1.0], [1.0]], [0.0, 1.0], p=2.0))
    x, _ = solve_lifted(lifted, 1e-10)
    np.testing.assert_allclose(x, [0.5], atol=1e-8)
    # z = N x - v as fixed by the lifted block row [N, -I]
    np.testing.assert_allclose(np.array([[1.0], [1.0]]) @ x - [0, 1], [0.5, -0.5], atol=1e-8)


def test_lift_random_against_oracle():
    rng = np.random.default_rng(1)
    N, v = rng.standard_normal((4, 3)), rng.standard_normal(4)
    x, _ = solve_lifted(lift_general(GeneralInstance(N, v, p=4.0)), 1e-9)
    ref = lp_min_residual(N, v, 4.0)
    assert lp_norm(N @ x - v, 4) <= (1 + 1e-9) * lp_norm(N @ ref - v, 4)


def test_structured_collapses_without_constraints():
    rng = np.random.default_rng(2)
    N, v, w = rng.standard_normal((6, 3)), rng.standard_normal(6), rng.random(6) + 0.1
    x = solve_general_structured(N, v, np.zeros((0, 3)), [], w)
    ref = np.linalg.solve(N.T @ (w[:, None] * N), N.T @ (w * v))
    np.testing.assert_allclose(x, ref, rtol=1e-10)


def test_structured_matches_lifted_weighted_ls():
    rng = np.random.default_rng(3)
    N, v = rng.standard_normal((6, 4)), rng.standard_normal(6)
    A, b = rng.standard_normal((2, 4)), rng.standard_normal(2)
    w, u = rng.random(6) + 0.1, rng.random(4) + 0.1
    lifted = lift_general(GeneralInstance(N, v, A, b))
    # weights u on the free block turn into extra residual rows I x - 0
    ref = solve_weighted_ls(lifted.A, lifted.b, np.concatenate([u, w])).x[:4]
    got = solve_general_structured(np.vstack([N, np.eye(4)]), np.concatenate([v, np.zeros(4)]), A, b,
                                   np.concatenate([w, u]))
    np.testing.assert_allclose(got, ref, rtol=1e-8)
    # an unweighted free block, against the dense KKT system
    free = weighted_ls_kkt(lifted.A, lifted.b, np.concatenate([np.zeros(4), w]))[:4]
    np.testing.assert_allclose(solve_general_structured(N, v, A, b, w), free, rtol=1e-8)


def test_small_p_identity():
    b = np.array([0.3, -1.0])
    np.testing.assert_allclose(solve_small_p(np.eye(2), b, 1.5, 1e-8), b, atol=1e-10)


@pytest.mark.parametrize("p", [1.1, 1.5, 1.9])
def test_small_p_symmetric(p):
    x = solve_small_p([[1, 1]], [1], p, 1e-8)
    assert x.sum() == pytest.approx(1, abs=1e-12)
    assert lp_norm(x, p) <= (1 + 1e-7) * lp_norm([0.5, 0.5], p)


@pytest.mark.parametrize("p", [1.1, 1.5, 1.9])
def test_small_p_golden_section(p):
    A, b = np.array([[1.0, 2.0]]), np.array([1.0])
    eps = 1e-8
    x = solve_small_p(A, b, p, eps)
    ref = golden_affine(A, b, p)
    assert lp_norm(x, p) <= (1 + 10 * eps) * lp_norm(ref, p)
    assert abs(A @ x - b)[0] <= 1e-8


def test_small_p_duality_identity():
    rng = np.random.default_rng(4)
    A, b = rng.standard_normal((2, 5)), rng.standard_normal(2)
    p = 1.5
    x = solve_small_p(A, b, p, 1e-10)
    # optimality certificate: y from the normal cone, ||x||_p = <y, b> / ||A^T y||_p'
    y = np.linalg.lstsq(A.T, np.sign(x) * np.abs(x) ** (p - 1), rcond=None)[0]
    assert lp_norm(x, p) == pytest.approx(y @ b / lp_norm(A.T @ y, dual_exponent(p)), rel=1e-4)


def test_small_p_residual_against_primal():
    rng = np.random.default_rng(5)
    N, v = rng.random((15, 3)), rng.random(15)
    p = 1.5
    x = solve_small_p_residual(N, v, p, 1e-8)
    # compare with the constrained form min ||z||_p, [N, -I][x; z] = v, whose free block is x
    lifted = lift_general(GeneralInstance(N, v, p=p))
    from scipy.optimize import minimize

    f = lambda t: np.sum(np.abs(N @ t - v) ** p)
    ref = minimize(f, np.linalg.lstsq(N, v, rcond=None)[0], method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 20000}).x
    assert lifted.A.shape == (15, 18)
    assert lp_norm(N @ x - v, p) <= (1 + 1e-6) * lp_norm(N @ ref - v, p)


def test_general_instance_validation():
    with pytest.raises(ValueError):
        GeneralInstance(np.ones((3, 2)), np.ones(2))
    with pytest.raises(ValueError):
        GeneralInstance(np.array([[np.nan]]), np.ones(1))
