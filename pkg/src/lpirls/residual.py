"""Constant-factor solver for min_{Ax=b} ||x^2||_p + <theta, x^2>.

This is the inner problem of iterative refinement. Either a point with
||x||_{2p} <= 2M and <theta, x^2> <= OPT is returned, or a dual vector r
with ||r||_q = 1 and E(r + theta) >= M^2 / (2 kappa).
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import IterationBudgetExceeded
from .linsys import AffineSystem
from .low_precision import SolveOutcome, Step
from .numerics import alpha_from_gamma, dual_exponent, gamma_step, lp_norm

log = logging.getLogger(__name__)


class ResidualProblem:
    """Inputs of one residual solve.

    Built either from an explicit augmented system ``(A_aug, b_aug)`` or,
    via :meth:`on_system`, from a base system plus one extra row ``g`` with
    right-hand side ``target`` (the other right-hand sides being zero). In
    the second form least-squares queries go through
    ``system.direction`` and never factor the augmented matrix.
    """

    def __init__(self, p_res, A_aug, b_aug, theta, M):
        A_aug = np.atleast_2d(np.asarray(A_aug, dtype=float))
        b_aug = np.asarray(b_aug, dtype=float).reshape(-1)
        self.p_res = float(p_res)
        self.theta = np.asarray(theta, dtype=float)
        self.M = float(M)
        if np.any(b_aug[:-1] != 0) or b_aug[-1] == 0:
            self.system = AffineSystem(A_aug, b_aug)
            self.g = None
            self.target = None
        else:
            self.system = AffineSystem(A_aug[:-1], b_aug[:-1])
            self.g = A_aug[-1]
            self.target = float(b_aug[-1])
        self._check()

    @classmethod
    def on_system(cls, system, g, target, theta, M, p_res):
        self = cls.__new__(cls)
        self.p_res = float(p_res)
        self.theta = np.asarray(theta, dtype=float)
        self.M = float(M)
        self.system = system
        self.g = np.asarray(g, dtype=float)
        self.target = float(target)
        self._check()
        return self

    def _check(self):
        if self.p_res < 1 or self.M <= 0 or np.any(self.theta < 0):
            raise ValueError("need p_res >= 1, M > 0 and theta >= 0")
        if self.theta.shape != (self.system.dim,):
            raise ValueError("theta has wrong length")

    @property
    def n(self):
        return self.system.dim

    def least_squares(self, w):
        """(variables, objective coordinates) minimising <w, z^2>."""
        if self.g is None:
            return self.system.least_squares(w)
        return self.system.direction(w, self.g, self.target)

    def energy(self, w):
        """E(w) for this problem's feasible set; not counted as a solve.

        Evaluated exactly: a nearly unreachable extra row gives a large
        energy instead of the solver's degeneracy error.
        """
        w = np.asarray(w, dtype=float)
        before = self.system.linear_solves
        if self.g is None:
            _, z = self.system.least_squares(w)
        else:
            _, z = self.system.direction(w, self.g, self.target, tol=0.0)
        self.system.linear_solves = before
        return float(np.dot(w, z * z))


def small_p_branch(p_res, n):
    """True when one weighted solve suffices (q >= ln n, i.e. p <= ln n/(ln n - 1))."""
    q = dual_exponent(p_res)
    return q >= math.log(n) if n > 1 else True


def residual_solve(prob, record=False, max_iterations=None):
    """Run the residual solver; the outcome carries kappa and, if primal, ``z``."""
    n = prob.n
    p, M, theta = prob.p_res, prob.M, prob.theta
    q = dual_exponent(p)
    start = prob.system.linear_solves
    history = []

    def done(**kw):
        used = prob.system.linear_solves - start
        out = SolveOutcome(iterations=used, linear_solves=used, q=q, M=M, history=history, **kw)
        return out

    if small_p_branch(p, n):
        r = np.full(n, 1.0 if math.isinf(q) else n ** (-1.0 / q))
        u, z = prob.least_squares(r + theta)
        if lp_norm(z, 2 * p) <= 2 * M:
            out = done(kind="primal", x=u, case=1, kappa=1.0)
            out.z = z
            return out
        return done(kind="certificate", r=r / lp_norm(r, q), case=3, kappa=1.0)

    cap_low = n ** (2.0 / (2 * q + 1))
    soft = 100.0 * n ** (1.0 / (2 * q + 1))
    cap = max_iterations or max(10_000, int(100 * soft * max(math.log(n), 1.0)))
    r = np.full(n, (2 * q - 1) / (2 * q * n ** (1.0 / q)))
    s_u = s_z = None
    t = t_low = 0
    while lp_norm(r, q) <= 1.0:
        if t >= cap:
            raise IterationBudgetExceeded(f"residual_solve exceeded {cap} iterations")
        u, z = prob.least_squares(r + theta)
        gamma = gamma_step(z, r, M, q, 2.0)
        alpha = alpha_from_gamma(gamma, q)
        if np.all(alpha == 1.0):
            out = done(kind="primal", x=u, case=1, kappa=q)
            out.z = z
            return out
        r_next = alpha * r
        if record:
            history.append(Step(r, r_next, z, gamma))
        r = r_next
        if alpha.max() <= cap_low:
            if s_u is None:
                s_u, s_z = u.copy(), z.copy()
            else:
                s_u, s_z = s_u + u, s_z + z
            t_low += 1
        if t_low > 0 and lp_norm(s_z / t_low, 2 * p) <= 2 * M:
            out = done(kind="primal", x=s_u / t_low, case=2, kappa=q)
            out.z = s_z / t_low
            return out
        t += 1
    if t > soft:
        log.warning("residual_solve used %d iterations (soft bound %.3g)", t, soft)
    return done(kind="certificate", r=r / lp_norm(r, q), case=3, kappa=q)


def residual_invariant_witness(prob, prev_r, next_r):
    """Both sides of E(r'+theta) - E(r+theta) >= M^2 (||r'||_q - ||r||_q)."""
    if np.array_equal(prev_r, next_r):
        return 0.0, 0.0
    q = dual_exponent(prob.p_res)
    lhs = prob.energy(next_r + prob.theta) - prob.energy(prev_r + prob.theta)
    rhs = prob.M**2 * (lp_norm(next_r, q) - lp_norm(prev_r, q))
    return lhs, rhs
