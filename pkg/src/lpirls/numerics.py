"""Overflow-safe l_p arithmetic shared by the solvers."""

import math

import numpy as np

_BIG = 1e300


def dual_exponent(p):
    """Return q with 1/p + 1/q = 1 (``inf`` for p == 1)."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def safe_pow(y, e):
    """Elementwise ``y**e`` for y >= 0 evaluated as exp(e*log y), with 0**e = 0."""
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    pos = y > 0
    with np.errstate(over="ignore"):
        out[pos] = np.exp(e * np.log(y[pos]))
    return out


def lp_norm(x, p):
    """(sum |x_i|^p)^(1/p), scaled by max|x_i| so large p does not overflow."""
    x = np.abs(np.asarray(x, dtype=float))
    if x.size == 0:
        return 0.0
    m = float(x.max())
    if m == 0.0:
        return 0.0
    if math.isinf(p):
        return m
    return m * float(np.sum(safe_pow(x / m, p))) ** (1.0 / p)


def lp_norm_pow(x, p):
    """||x||_p^p."""
    return float(np.sum(safe_pow(np.abs(np.asarray(x, dtype=float)), p)))


def signed_pow(x, e):
    """sign(x) * |x|^e."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * safe_pow(np.abs(x), e)


def _ratio_terms(x, r, q):
    # log of x_i^2 * ||r||_q^(q-1) / r_i^(q-1), -inf where x_i == 0
    nr = lp_norm(r, q)
    with np.errstate(divide="ignore"):
        logx2 = 2.0 * np.log(np.abs(x))
    return logx2 + (q - 1.0) * (math.log(nr) - np.log(r))


def gamma_step(x, r, M, q, threshold):
    """Multiplicative dual step.

    gamma_i = x_i^2 ||r||_q^(q-1) / (M^2 r_i^(q-1)) on coordinates where
    x_i^2 ||r||_q^(q-1) / r_i^(q-1) >= threshold * M^2, and 1 elsewhere.
    """
    x = np.asarray(x, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0) or M <= 0 or q <= 1:
        raise ValueError("gamma_step needs r > 0, M > 0, q > 1")
    nr = lp_norm(r, q)
    with np.errstate(over="ignore", invalid="ignore"):
        scale = (nr / r) ** (q - 1.0)
        lhs = x * x * scale
    rhs = threshold * M * M
    gamma = np.ones_like(x)
    if np.all(np.isfinite(lhs)) and lhs.max(initial=0.0) <= _BIG and rhs <= _BIG:
        hit = lhs >= rhs
        gamma[hit] = lhs[hit] / (M * M)
    else:
        log_lhs = _ratio_terms(x, r, q)
        log_m2 = 2.0 * math.log(M)
        hit = log_lhs >= math.log(threshold) + log_m2
        with np.errstate(over="ignore"):
            gamma[hit] = np.exp(log_lhs[hit] - log_m2)
    return gamma


def alpha_from_gamma(gamma, q):
    """alpha = gamma^(1/q), exactly 1 where gamma == 1."""
    gamma = np.asarray(gamma, dtype=float)
    alpha = np.ones_like(gamma)
    hit = gamma != 1.0
    alpha[hit] = np.exp(np.log(gamma[hit]) / q)
    return alpha
