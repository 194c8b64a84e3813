"""General-form regression and the 1 < p < 2 range via duality."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DualDegenerate
from .linsys import AffineSystem, ResidualSystem, solve_general_structured  # noqa: F401
from .numerics import dual_exponent, lp_norm_pow, signed_pow
from .refinement import lp_refine


@dataclass
class GeneralInstance:
    """min ||N x - v||_p subject to A x = b (A may have zero rows)."""

    N: np.ndarray
    v: np.ndarray
    A: np.ndarray = None
    b: np.ndarray = None
    p: float = 2.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.N = np.atleast_2d(np.asarray(self.N, dtype=float))
        self.v = np.asarray(self.v, dtype=float).reshape(-1)
        n = self.N.shape[1]
        self.A = np.zeros((0, n)) if self.A is None else np.asarray(self.A, dtype=float).reshape(-1, n)
        self.b = np.zeros(0) if self.b is None else np.asarray(self.b, dtype=float).reshape(-1)
        if self.N.shape[0] != self.v.size or self.A.shape[0] != self.b.size:
            raise ValueError("inconsistent instance dimensions")
        if not (np.all(np.isfinite(self.N)) and np.all(np.isfinite(self.v))):
            raise ValueError("non-finite entries")

    @property
    def shape(self):
        return self.N.shape

    def system(self):
        return ResidualSystem(self.N, self.v, self.A, self.b)

    def objective(self, x):
        return float(lp_norm_pow(self.N @ x - self.v, self.p)) ** (1.0 / self.p)


@dataclass
class RegressionInstance:
    """min ||u[n_free:]||_p subject to A u = b.

    The first ``n_free`` coordinates carry no objective weight; a plain
    instance has ``n_free == 0``. ``source`` keeps the general instance a
    lifted one came from, so solvers can use the structured solve.
    """

    A: np.ndarray
    b: np.ndarray
    p: float
    epsilon: float = 1e-8
    n_free: int = 0
    source: GeneralInstance = None

    def project(self, u):
        return np.asarray(u)[: self.n_free]

    def penalised(self, u):
        return np.asarray(u)[self.n_free :]

    def system(self):
        if self.source is not None:
            s = self.source
            return ResidualSystem(s.N, s.v, s.A, s.b)
        if self.n_free:
            raise ValueError("masked instance without a source has no system")
        return AffineSystem(self.A, self.b)


def lift_general(inst):
    """Rewrite min_{Ax=b} ||Nx - v||_p as min ||z||_p over [[N, -I], [A, 0]] [x; z] = [v; b]."""
    m, n = inst.N.shape
    s = inst.A.shape[0]
    top = np.hstack([inst.N, -np.eye(m)])
    bottom = np.hstack([inst.A, np.zeros((s, m))])
    return RegressionInstance(
        A=np.vstack([top, bottom]),
        b=np.concatenate([inst.v, inst.b]),
        p=inst.p,
        n_free=n,
        source=inst,
    )


def solve_lifted(lifted, epsilon, line_search=True):
    """Refinement on a lifted instance; returns (x, report) in original unknowns."""
    x, report = lp_refine(lifted.system(), None, lifted.p, epsilon, line_search=line_search)
    return x, report


def _small_p_epsilon(epsilon, n):
    return min(epsilon, float(n) ** -3)


def solve_small_p(A, b, p, epsilon, return_report=False):
    """min_{Ax=b} ||x||_p for 1 < p < 2 through the dual problem.

    Solves min_{<b,y>=1} ||A^T y||_{p'} (p' = p/(p-1) > 2) by refinement,
    reads off x = <b,y> / ||A^T y||^p' * (A^T y)^(p'-1), then restores exact
    feasibility with x += A^T (A A^T)^+ (b - A x).
    """
    if not 1 < p < 2:
        raise ValueError("solve_small_p needs 1 < p < 2")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1)
    d, n = A.shape
    pd = dual_exponent(p)
    eps = _small_p_epsilon(epsilon, n)
    dual = ResidualSystem(A.T, np.zeros(n), b[None, :], np.ones(1))
    y, report = lp_refine(dual, None, pd, eps, line_search=True)
    u = A.T @ y
    mass = lp_norm_pow(u, pd)
    if mass <= 1e-300:
        raise DualDegenerate("||A^T y|| vanished")
    x = (float(b @ y) / mass) * signed_pow(u, pd - 1.0)
    x = x + np.linalg.lstsq(A, b - A @ x, rcond=None)[0]
    if return_report:
        return x, report
    return x


def solve_small_p_residual(N, v, p, epsilon, return_report=False):
    """min_x ||N x - v||_p for 1 < p < 2 through the dual problem.

    The dual min ||y||_{p'} s.t. N^T y = 0, <v, y> = 1 is a plain affine
    problem; the residual is read off as -<v,y>/||y||^p' * y^(p'-1) and x
    is the least-squares fit of N x = v + residual.
    """
    if not 1 < p < 2:
        raise ValueError("solve_small_p_residual needs 1 < p < 2")
    N = np.atleast_2d(np.asarray(N, dtype=float))
    v = np.asarray(v, dtype=float).reshape(-1)
    m = N.shape[0]
    pd = dual_exponent(p)
    eps = _small_p_epsilon(epsilon, m)
    rhs = np.zeros(N.shape[1] + 1)
    rhs[-1] = 1.0
    dual = AffineSystem(np.vstack([N.T, v[None, :]]), rhs)
    y, report = lp_refine(dual, None, pd, eps, line_search=True)
    mass = lp_norm_pow(y, pd)
    if mass <= 1e-300:
        raise DualDegenerate("||y|| vanished")
    resid = -(float(v @ y) / mass) * signed_pow(y, pd - 1.0)
    x = np.linalg.lstsq(N, v + resid, rcond=None)[0]
    if return_report:
        return x, report
    return x
