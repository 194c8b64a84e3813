"""Low-precision primal-dual IRLS for min_{Ax=b} ||x||_{2p}.

``sub_solver`` decides, for a guess M of the optimum, whether a point with
||x||_{2p} <= (1+eps) M exists (returning it) or returns a dual vector r whose
energy certifies that the optimum is at least M / (1+eps).
``l2p_minimization`` binary-searches M over powers of (1+eps).
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IterationBudgetExceeded, SearchCollapsed
from .linsys import as_system, energy_of
from .numerics import alpha_from_gamma, dual_exponent, gamma_step, lp_norm

log = logging.getLogger(__name__)


@dataclass
class DualIterate:
    r: np.ndarray
    t: int = 0
    t_low: int = 0


@dataclass
class Step:
    """One multiplicative dual update, kept for invariant checks."""

    r_prev: np.ndarray
    r_next: np.ndarray
    x: np.ndarray
    gamma: np.ndarray


@dataclass
class SolveOutcome:
    """Either a primal point (``kind == "primal"``) or a dual certificate.

    ``x`` holds the solver variables (for a general-form system these are
    the original unknowns, not the residual) and ``z`` the matching
    objective coordinates when they differ. ``r`` is the certificate,
    normalised to ||r||_q = 1. ``case`` is 1, 2 or 3 as in the loop exits.
    """

    kind: str
    x: np.ndarray = None
    r: np.ndarray = None
    z: np.ndarray = None
    case: int = 0
    iterations: int = 0
    linear_solves: int = 0
    kappa: float = 1.0
    q: float = None
    M: float = None
    history: list = field(default_factory=list)

    @property
    def is_primal(self):
        return self.kind == "primal"


@dataclass
class SubSolverConfig:
    epsilon: float
    M: float
    p: float = 2.0
    step_cap: float = None
    max_iterations: int = None
    record: bool = False


def default_step_cap(n, epsilon, q):
    """S = n^(2/(2q+1)) (1/eps)^((q-1)/(2q+1))."""
    return n ** (2.0 / (2 * q + 1)) * (1.0 / epsilon) ** ((q - 1.0) / (2 * q + 1))


def iteration_bound(n, epsilon, q):
    """Shape of the sub-solver iteration bound, without its hidden constant."""
    e = 1.0 / epsilon
    with np.errstate(over="ignore"):
        lead = e ** ((q + 3) / 2.0) + n ** (1.0 / (2 * q + 1)) * e ** ((q * q + 2 * q) / (2 * q + 1))
    return lead * math.log(max(n / epsilon**q, math.e))


def default_max_iterations(n, epsilon, q):
    bound = 10.0 * iteration_bound(n, epsilon, q)
    if not math.isfinite(bound):
        return 10**9
    return int(min(max(10_000, math.ceil(bound)), 10**9))


def sub_solver(A, b, cfg):
    """Primal-dual sub-solver for a fixed guess ``cfg.M``.

    ``A`` may also be a prebuilt system (see :mod:`lpirls.linsys`), in which
    case ``b`` is ignored.
    """
    system = as_system(A, b)
    eps, M = cfg.epsilon, cfg.M
    if not 0 < eps < 1 or M <= 0:
        raise ValueError("need 0 < epsilon < 1 and M > 0")
    q = dual_exponent(cfg.p)
    if math.isinf(q):
        raise ValueError("sub_solver needs p > 1")
    n = system.dim
    S = cfg.step_cap if cfg.step_cap is not None else default_step_cap(n, eps, q)
    cap = cfg.max_iterations or default_max_iterations(n, eps, q)
    start = system.linear_solves

    it = DualIterate(r=np.full(n, n ** (-1.0 / q)))
    s_u = None
    history = []

    def done(**kw):
        used = system.linear_solves - start
        out = SolveOutcome(
            iterations=used,
            linear_solves=used,
            q=q,
            M=M,
            history=history,
            **kw,
        )
        soft = 100.0 * iteration_bound(n, eps, q)
        if out.iterations > soft:
            log.warning("sub_solver used %d iterations (soft bound %.3g)", out.iterations, soft)
        return out

    while lp_norm(it.r, q) <= 1.0 / eps:
        if it.t >= cap:
            raise IterationBudgetExceeded(f"sub_solver exceeded {cap} iterations")
        u, x = system.least_squares(it.r)
        gamma = gamma_step(x, it.r, M, q, 1.0 + eps)
        if np.all(gamma == 1.0):
            return done(kind="primal", x=u, case=1)
        alpha = alpha_from_gamma(gamma, q)
        r_next = it.r * alpha
        if cfg.record:
            history.append(Step(it.r, r_next, x, gamma))
        it.r = r_next
        if alpha.max() <= S:
            s_u = u.copy() if s_u is None else s_u + u
            it.t_low += 1
        if it.t_low > 0:
            avg = s_u / it.t_low
            if lp_norm(system.image(avg), 2 * cfg.p) <= (1.0 + eps) * M:
                return done(kind="primal", x=avg, case=2)
        it.t += 1
    return done(kind="certificate", r=it.r / lp_norm(it.r, q), case=3)


def search_range(norm2, n, epsilon, p):
    """Exponent range [L, U] for the guesses (1+eps)^i."""
    base = math.log1p(epsilon)
    lower = norm2 / n ** (0.5 - 0.5 / p)
    L = math.floor(math.log(lower) / base)
    U = math.ceil(math.log(norm2) / base)
    return L, U


def l2p_minimization(A, b, epsilon, p, trace=None):
    """Approximate argmin_{Ax=b} ||x||_{2p} within a (1+eps) factor.

    ``trace``, if a list, receives every sub-solver outcome in order (with
    per-step history recorded).
    """
    system = as_system(A, b)
    if not 0 < epsilon < 1 or p < 1:
        raise ValueError("need 0 < epsilon < 1 and p >= 1")
    n = system.dim
    x0, z0 = system.least_squares(np.ones(n))
    norm2 = float(np.linalg.norm(z0))
    if p == 1 or norm2 == 0.0:
        # min-l2 point is already optimal
        return x0
    L, U = search_range(norm2, n, epsilon, p)
    record = trace is not None
    kept = None
    while L < U:
        P = (L + U) // 2
        cfg = SubSolverConfig(epsilon=epsilon, M=(1.0 + epsilon) ** P, p=p, record=record)
        out = sub_solver(system, None, cfg)
        if record:
            trace.append(out)
        if out.is_primal:
            kept = out.x
            U = P
        else:
            L = P + 1
    if kept is None:
        # the top guess was never probed; it is feasible since ||x0||_2p <= ||x0||_2
        cfg = SubSolverConfig(epsilon=epsilon, M=(1.0 + epsilon) ** U, p=p, record=record)
        out = sub_solver(system, None, cfg)
        if record:
            trace.append(out)
        if not out.is_primal:
            raise SearchCollapsed("no guess produced a primal solution")
        kept = out.x
    return kept


def invariant_witness(A, b, r_prev, r_next, q, M, theta=None):
    """Both sides of E(r') - E(r) >= M^2 (||r'||_q - ||r||_q).

    With ``theta`` the energies are evaluated at r + theta (residual-solver
    form). Returns ``(lhs, rhs)``; energies are recomputed from scratch.
    """
    if np.array_equal(r_prev, r_next):
        return 0.0, 0.0
    shift = 0.0 if theta is None else theta
    lhs = energy_of(A, b, r_next + shift) - energy_of(A, b, r_prev + shift)
    rhs = M * M * (lp_norm(r_next, q) - lp_norm(r_prev, q))
    return lhs, rhs
