"""High-precision l_p solver by iterative refinement (p >= 2).

Keeps an upper bound M on the optimality gap (scaled by 16p). Each round
asks the residual solver for a direction d with A d = 0, <g, d> = M/2; if
none exists at constant-factor quality, M is halved, otherwise x moves
along -d.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DegenerateDirection, NonConvergence
from .linsys import as_system
from .numerics import lp_norm_pow, safe_pow, signed_pow
from .residual import ResidualProblem, residual_solve, small_p_branch

log = logging.getLogger(__name__)


@dataclass
class RefinementState:
    x: np.ndarray
    M: float
    kappa: float
    t: int = 0
    linear_solve_count: int = 0


@dataclass
class RefineReport:
    """Counters for one ``lp_refine`` run.

    ``objective`` is ||x||_p^p (or ||Nx - v||_p^p) at the returned point.
    When recording, ``trace`` holds one ``(objective, M, action)`` tuple per
    round and ``residual_runs`` the ``(problem, outcome)`` pairs.
    """

    objective: float = 0.0
    rounds: int = 0
    residual_calls: int = 0
    linear_solves: int = 0
    halvings: int = 0
    improvements: int = 0
    kappa: float = 1.0
    trace: list = field(default_factory=list)
    residual_runs: list = field(default_factory=list)


def residual_gradient(x, p):
    """g = |x|^(p-2) x and R = 2 |x|^(p-2)."""
    x = np.asarray(x, dtype=float)
    mag = safe_pow(np.abs(x), p - 2.0)
    return mag * x, 2.0 * mag


def res_value(x, delta, p):
    """<g, d> - <R, d^2> - ||d||_p^p at the point x."""
    g, R = residual_gradient(x, p)
    delta = np.asarray(delta, dtype=float)
    return float(np.dot(g, delta) - np.dot(R, delta * delta) - lp_norm_pow(delta, p))


def bregman_sandwich_check(x, delta, p):
    """(lower, divergence, upper) for the Bregman divergence of ||.||_p^p.

    lower = p/8 <r, d^2> + 2^-(p+1) ||d||_p^p,
    upper = 2 p^2 <r, d^2> + p^p ||d||_p^p, with r = |x|^(p-2).
    """
    x = np.asarray(x, dtype=float)
    delta = np.asarray(delta, dtype=float)
    r = safe_pow(np.abs(x), p - 2.0)
    grad = p * signed_pow(x, p - 1.0)
    quad = float(np.dot(r, delta * delta))
    dp = lp_norm_pow(delta, p)
    middle = lp_norm_pow(x + delta, p) - lp_norm_pow(x, p) - float(np.dot(grad, delta))
    return p / 8.0 * quad + 2.0 ** -(p + 1) * dp, middle, 2 * p * p * quad + p**p * dp


def kappa_for(p, n):
    """1 when the residual solver takes its single-solve branch, else p/(p-2)."""
    if small_p_branch(p / 2.0, n):
        return 1.0
    return p / (p - 2.0)


def residual_call_bound(p, n, epsilon):
    ln = max(math.log(n), 1.0)
    return 100.0 * p * p * ln * math.log(max(n, 2) / epsilon)


def _line_search(z, dz, p, s_fixed):
    """Step s > 0 minimising ||z - s dz||_p^p (convex in s)."""

    def slope(s):
        return -p * float(np.dot(signed_pow(z - s * dz, p - 1.0), dz))

    if slope(0.0) >= 0:
        return s_fixed
    hi = s_fixed
    for _ in range(200):
        if slope(hi) > 0:
            break
        hi *= 2.0
    else:
        return s_fixed
    s = brentq(slope, 0.0, hi, xtol=1e-15 * hi, rtol=1e-13)
    if lp_norm_pow(z - s * dz, p) <= lp_norm_pow(z - s_fixed * dz, p):
        return s
    return s_fixed


def lp_refine(A, b, p, epsilon, line_search=True, record=False, max_rounds=None):
    """Approximately minimise ||x||_p subject to Ax = b, to a (1+eps) factor.

    ``A`` may be a prebuilt system (e.g. :class:`~lpirls.linsys.ResidualSystem`
    for ||Nx - v||_p), in which case ``b`` is ignored. With
    ``line_search=True`` (the default) an improving round moves to the exact
    minimiser of the objective along the returned direction instead of the
    fixed 1/(64 p kappa) step, which is never beaten by less.
    ``line_search=False`` takes the fixed step; it has the same guarantees
    but needs orders of magnitude more rounds.

    Returns ``(x, report)``.
    """
    if p < 2:
        raise ValueError("lp_refine needs p >= 2")
    if not 0 < epsilon < 1:
        raise ValueError("need 0 < epsilon < 1")
    system = as_system(A, b)
    start = system.linear_solves
    n = system.dim
    x, z = system.least_squares(np.ones(n))
    obj = lp_norm_pow(z, p)
    kappa = kappa_for(p, n)
    state = RefinementState(x=x, M=obj / (16.0 * p), kappa=kappa)
    report = RefineReport(kappa=kappa)
    cap = max_rounds or int(math.ceil(residual_call_bound(p, n, epsilon)))
    stop = epsilon / (16.0 * p * (1.0 + epsilon))
    fixed = 1.0 / (64.0 * p * kappa)

    while obj > 0 and state.M >= stop * obj:
        if state.t >= cap:
            raise NonConvergence(f"lp_refine exceeded {cap} residual calls")
        M = state.M
        g, R = residual_gradient(z, p)
        theta = M ** ((2.0 - p) / p) * R
        prob = ResidualProblem.on_system(
            system, g, M / 2.0, theta, 2.0 * math.sqrt(kappa) * M ** (1.0 / p), p / 2.0
        )
        try:
            out = residual_solve(prob, record=record)
        except DegenerateDirection:
            # no feasible direction has <g, d> != 0: x is stationary
            out = None
        report.residual_calls += 1
        if record and out is not None:
            report.residual_runs.append((prob, out))
        if out is None or not out.is_primal or float(np.dot(R, out.z * out.z)) >= 2.0 * M:
            state.M = M / 2.0
            report.halvings += 1
            action = "halve"
        else:
            s = _line_search(z, out.z, p, fixed) if line_search else fixed
            state.x = state.x - s * out.x
            z_new = system.image(state.x)
            obj_new = lp_norm_pow(z_new, p)
            z, obj = z_new, obj_new
            report.improvements += 1
            action = "step"
        state.t += 1
        if record:
            report.trace.append((obj, M, action))

    state.linear_solve_count = system.linear_solves - start
    if state.t > residual_call_bound(p, n, epsilon):
        log.warning("lp_refine used %d residual calls", state.t)
    report.rounds = state.t
    report.linear_solves = state.linear_solve_count
    report.objective = obj
    return state.x, report
