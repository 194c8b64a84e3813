import numpy as np
import pytest
from scipy.optimize import brentq

from lpirls.errors import NonConvergence
from lpirls.linsys import ResidualSystem
from lpirls.numerics import lp_norm, lp_norm_pow
from lpirls.refinement import (
    bregman_sandwich_check,
    kappa_for,
    lp_refine,
    res_value,
    residual_gradient,
)
from oracles import lp_min_affine, lp_min_residual


def test_identity_returns_b():
    b = np.array([1.0, -2.0, 0.5])
    x, rep = lp_refine(np.eye(3), b, 4.0, 1e-8)
    np.testing.assert_allclose(x, b)
    assert rep.improvements == 0


def test_symmetric_optimum():
    x, _ = lp_refine([[1, 1]], [1], 4.0, 1e-10)
    np.testing.assert_allclose(x, [0.5, 0.5], atol=1e-6)
    assert lp_norm_pow(x, 4) == pytest.approx(1 / 8, rel=1e-10)


def test_stationarity_bisection_oracle():
    # x1^3 = lam, x2^3 = 2 lam, x1 + 2 x2 = 1
    lam = brentq(lambda l: np.cbrt(l) + 2 * np.cbrt(2 * l) - 1, 0, 1)
    ref = np.array([np.cbrt(lam), np.cbrt(2 * lam)])
    x, _ = lp_refine([[1, 2]], [1], 4.0, 1e-8)
    assert lp_norm(x, 4) <= (1 + 1e-8) * lp_norm(ref, 4)
    np.testing.assert_allclose(x, ref, rtol=1e-3)


def test_residual_gradient_pair():
    x = np.array([-2.0, 0.0, 1.5])
    g, R = residual_gradient(x, 4.0)
    assert np.all(np.sign(g) == np.sign(x))
    nz = x != 0
    np.testing.assert_allclose(R[nz], 2 * np.abs(g[nz]) / np.abs(x[nz]))
    assert R[1] == 0 and g[1] == 0


def test_res_value_examples():
    assert res_value([1.0, 2.0], [0.0, 0.0], 4.0) == 0
    assert res_value([1.0, 0.0], [0.1, 0.0], 2.0) == pytest.approx(0.07)


def test_sandwich_closed_forms():
    assert bregman_sandwich_check([1.0, 2.0], [0.0, 0.0], 4.0) == (0.0, 0.0, 0.0)
    d = np.array([0.3, -1.2])
    lo, mid, hi = bregman_sandwich_check(np.zeros(2), d, 4.0)
    dp = lp_norm_pow(d, 4)
    assert (lo, mid, hi) == pytest.approx((2.0**-5 * dp, dp, 4.0**4 * dp))
    assert lo <= mid <= hi


def test_verbatim_step_invariants():
    """Fixed-step refinement keeps the gap bound, decreases monotonically, contracts on steps."""
    rng = np.random.default_rng(0)
    for _ in range(3):
        n = rng.integers(3, 6)
        A, b = rng.standard_normal((1, n)), rng.standard_normal(1)
        p = 4.0
        opt = lp_norm_pow(lp_min_affine(A, b, p), p)
        x, rep = lp_refine(A, b, p, 1e-4, line_search=False, record=True)
        assert lp_norm(x, p) <= (1 + 1e-4) * opt ** (1 / p)
        assert np.allclose(A @ x, b)
        prev = None
        kappa = rep.kappa
        for obj, M, action in rep.trace:
            assert obj - opt <= 16 * p * M * 2 + 1e-12  # M here is the bound before the round
            if prev is not None:
                assert obj <= prev * (1 + 1e-12)
                if action == "step":
                    rate = 1 - 1 / (2**13 * p * kappa)
                    assert obj - opt <= rate * (prev - opt) + 1e-12 * opt
            prev = obj


def test_line_search_matches_verbatim_optimum():
    A, b = np.array([[1.0, 2.0, -1.0, 0.5]]), np.array([1.0])
    xa, ra = lp_refine(A, b, 4.0, 1e-6, line_search=False)
    xb, rb = lp_refine(A, b, 4.0, 1e-6, line_search=True)
    assert lp_norm(xa, 4) == pytest.approx(lp_norm(xb, 4), rel=1e-5)
    assert rb.linear_solves < ra.linear_solves


def test_general_form_against_oracle():
    rng = np.random.default_rng(1)
    for p in [4.0, 8.0]:
        N, v = rng.random((12, 4)), rng.random(12)
        x, rep = lp_refine(ResidualSystem(N, v), None, p, 1e-9)
        ref = lp_min_residual(N, v, p)
        assert lp_norm(N @ x - v, p) <= (1 + 1e-9) * lp_norm(N @ ref - v, p)
        assert rep.objective == pytest.approx(lp_norm_pow(N @ x - v, p))


def test_kappa():
    assert kappa_for(4.0, 2) == 1.0
    assert kappa_for(8.0, 100) == pytest.approx(8 / 6)


def test_round_cap():
    A = np.random.default_rng(2).standard_normal((2, 8))
    with pytest.raises(NonConvergence):
        lp_refine(A, [1, 1], 8.0, 1e-10, max_rounds=2)


def test_rejects_bad_inputs():
    with pytest.raises(ValueError):
        lp_refine([[1, 1]], [1], 1.5, 1e-6)
    with pytest.raises(ValueError):
        lp_refine([[1, 1]], [1], 4.0, 0.0)


def test_feasible_near_optimum_large_p():
    # near the optimum g is almost in the row space of A; the direction must stay in null(A)
    rng = np.random.default_rng(2024)
    for _ in range(40):
        n = rng.integers(3, 9)
        d = rng.integers(1, n)
        A, b = rng.standard_normal((d, n)), rng.standard_normal(d)
        x, _ = lp_refine(A, b, 8.0, 1e-10)
        assert np.linalg.norm(A @ x - b) <= 1e-8 * (1 + np.linalg.norm(b))
