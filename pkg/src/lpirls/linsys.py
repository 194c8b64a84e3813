"""Weighted least-squares solves and the energy function.

Every solver in the package reaches the linear algebra through one of two
*systems*:

``AffineSystem(A, b)``
    feasible set {x : Ax = b}, objective coordinates are x itself.
``ResidualSystem(N, v, A, b)``
    feasible set {x : Ax = b}, objective coordinates are z = Nx - v.

Both answer the two queries the IRLS loops need -- ``least_squares(w)``
(minimise <w, z^2>) and ``direction(w, g, target)`` (minimise <w, dz^2>
over feasible directions with <g, dz> = target) -- and count how many times
they were asked.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import DegenerateDirection, InfeasibleDemand, SingularSystem

WEIGHT_FLOOR = 1e-12
PIVOT_TOL = 1e-12
FEAS_TOL = 1e-8
_REFINE_STEPS = 3
_NULL_TOL = 1e-14


@dataclass
class EnergySolution:
    x: np.ndarray
    energy: float
    multiplier: np.ndarray


def floor_weights(w):
    """Raise entries below 1e-12 * max(w) up to that floor."""
    w = np.asarray(w, dtype=float)
    if w.size == 0:
        return w.copy()
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and nonnegative")
    top = w.max()
    if top <= 0:
        raise SingularSystem("all weights are zero")
    return np.maximum(w, WEIGHT_FLOOR * top)


def feasible(A, x, b):
    """Relative-residual feasibility test ||Ax - b|| <= 1e-8 (1 + ||b||)."""
    if A.shape[0] == 0:
        return True
    return np.linalg.norm(A @ x - b) <= FEAS_TOL * (1.0 + np.linalg.norm(b))


class SpdFactor:
    """Factorization of a symmetric PSD matrix with pseudo-inverse fallback.

    Cholesky is tried first; if it fails or a pivot falls below
    ``PIVOT_TOL * max(diag)`` the matrix is eigendecomposed and eigenvalues
    under the same threshold are dropped.
    """

    def __init__(self, K):
        K = np.asarray(K, dtype=float)
        self.K = K
        self.size = K.shape[0]
        self._chol = None
        self._eig = None
        if self.size == 0:
            return
        if not np.all(np.isfinite(K)):
            raise SingularSystem("normal matrix has non-finite entries")
        top = float(np.max(np.diag(K)))
        if top <= 0:
            raise SingularSystem("normal matrix is zero")
        tol = PIVOT_TOL * top
        try:
            c, low = la.cho_factor(K, lower=True, check_finite=False)
            if np.min(np.diag(c)) ** 2 > tol:
                self._chol = (c, low)
        except la.LinAlgError:
            pass
        if self._chol is None:
            vals, vecs = la.eigh(K, check_finite=False)
            keep = vals > tol
            if not np.any(keep):
                raise SingularSystem("normal matrix has no pivot above tolerance")
            self._eig = (vals[keep], vecs[:, keep])

    @property
    def rank_deficient(self):
        return self._eig is not None

    def solve(self, rhs):
        if self.size == 0:
            return np.zeros_like(rhs)
        if self._chol is not None:
            return la.cho_solve(self._chol, rhs, check_finite=False)
        vals, vecs = self._eig
        coef = vecs.T @ rhs
        if coef.ndim == 1:
            return vecs @ (coef / vals)
        return vecs @ (coef / vals[:, None])


class WeightedLsSolver:
    """Handle for repeated ``min_{Ax=b} <w, x^2>`` queries on a fixed A.

    ``factor(w)`` builds and caches the factorization of A D(w)^-1 A^T;
    subsequent ``solve``/``project`` calls reuse it until the next ``factor``.
    Not safe for concurrent mutation.
    """

    def __init__(self, A):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.w = None
        self.dinv = None
        self.factorization = None

    def factor(self, w):
        w = floor_weights(w)
        if w.shape != (self.A.shape[1],):
            raise ValueError("weight vector has wrong length")
        self.w = w
        self.dinv = 1.0 / w
        K = (self.A * self.dinv) @ self.A.T
        self.factorization = SpdFactor(0.5 * (K + K.T))
        return self

    def _phi(self, rhs):
        A, dinv = self.A, self.dinv
        phi = self.factorization.solve(rhs)
        x = dinv * (A.T @ phi)
        scale = 1.0 + np.linalg.norm(rhs)
        for _ in range(_REFINE_STEPS):
            res = rhs - A @ x
            if np.linalg.norm(res) <= 1e-3 * FEAS_TOL * scale:
                break
            dphi = self.factorization.solve(res)
            phi = phi + dphi
            x = dinv * (A.T @ phi)
        return x, phi

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        A = self.A
        if A.shape[0] == 0:
            x = np.zeros(A.shape[1])
            return EnergySolution(x, 0.0, np.zeros(0))
        x, phi = self._phi(b)
        if not feasible(A, x, b):
            raise InfeasibleDemand(
                f"residual {np.linalg.norm(A @ x - b):.3e} exceeds tolerance"
            )
        return EnergySolution(x, float(np.dot(self.w, x * x)), phi)

    def project(self, y):
        """D^-1-weighted projection of y onto null(A): y - D^-1 A^T K^+ A y.

        The result can be much smaller than y (y nearly in the range of
        D^-1 A^T), so the leftover A z is re-projected until it is small
        relative to z itself; this reuses the factorization.
        """
        if self.A.shape[0] == 0:
            return np.array(y, dtype=float)
        corr, _ = self._phi(self.A @ y)
        z = y - corr
        scale = _NULL_TOL * np.linalg.norm(self.A)
        for _ in range(_REFINE_STEPS):
            leak = self.A @ z
            if np.linalg.norm(leak) <= scale * np.linalg.norm(z):
                break
            z = z - self._phi(leak)[0]
        return z


def solve_weighted_ls(A, b, w):
    """Minimiser of <w, x^2> over {x : Ax = b}.

    Computed as x = D^-1 A^T phi with (A D^-1 A^T) phi = b, D = diag(w)
    after flooring tiny weights.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    solver = WeightedLsSolver(A).factor(w)
    sol = solver.solve(b)
    sol.energy = float(np.dot(np.asarray(w, dtype=float), sol.x * sol.x))
    return sol


def energy(A, b, w):
    """E(w) = min_{Ax=b} <w, x^2>."""
    return solve_weighted_ls(A, b, w).energy


def solve_augmented_ls(A, g, target, w):
    """Minimise <w, d^2> subject to A d = 0 and <g, d> = target.

    Equivalent to ``solve_weighted_ls`` on the stacked matrix [A; g^T] with
    right-hand side [0, target], but only ever factors A D^-1 A^T: the extra
    row enters through a rank-one (Schur complement) correction.
    The returned multiplier is the scalar Lagrange multiplier of the g-row.
    """
    g = np.asarray(g, dtype=float)
    A = np.asarray(A, dtype=float).reshape(-1, g.size)
    solver = WeightedLsSolver(A).factor(w)
    return _augmented(solver, g, target, np.asarray(w, dtype=float))


def _augmented(solver, g, target, w, tol=1e-12):
    y = solver.dinv * g
    z = solver.project(y)
    s = float(np.dot(g, z))
    if s <= tol * float(np.dot(g, y)):
        if target == 0:
            x = np.zeros_like(g)
            return EnergySolution(x, 0.0, np.zeros(1))
        raise DegenerateDirection("g lies in the row space of A")
    psi = target / s
    x = psi * z
    return EnergySolution(x, float(np.dot(w, x * x)), np.array([psi]))


def energy_increase_lower_bound(x, w_old, w_new):
    """sum_i w_i x_i^2 (1 - w_i / w'_i), a lower bound on E(w') - E(w)."""
    x = np.asarray(x, dtype=float)
    w_old = np.asarray(w_old, dtype=float)
    w_new = np.asarray(w_new, dtype=float)
    if np.any(w_old <= 0) or np.any(w_new < w_old):
        raise ValueError("need w_new >= w_old > 0")
    return float(np.sum(w_old * x * x * (1.0 - w_old / w_new)))


# ---------------------------------------------------------------------------
# general form: <w, (Nx - v)^2> over Ax = b


def solve_general_structured(N, v, A, b, w):
    """Minimiser of <w, (Nx - v)^2> over {x : Ax = b}.

    Uses x = F^+ (N^T R v + A^T (A F^+ A^T)^+ (b - A F^+ N^T R v)) with
    F = N^T R N, R = diag(w); the lifted [[N, -I], [A, 0]] matrix is never
    formed.
    """
    N = np.atleast_2d(np.asarray(N, dtype=float))
    v = np.asarray(v, dtype=float)
    n = N.shape[1]
    A = np.asarray(A, dtype=float).reshape(-1, n)
    b = np.asarray(b, dtype=float).reshape(-1)
    wf = floor_weights(w)
    F = (N.T * wf) @ N
    fac = SpdFactor(0.5 * (F + F.T))
    h = N.T @ (wf * v)
    if A.shape[0] == 0:
        return fac.solve(h)
    Finv_h = fac.solve(h)
    Finv_At = fac.solve(A.T)
    G = A @ Finv_At
    gfac = SpdFactor(0.5 * (G + G.T))
    rhs = b - A @ Finv_h
    y = gfac.solve(rhs)
    x = Finv_h + Finv_At @ y
    for _ in range(_REFINE_STEPS):
        res = b - A @ x
        if np.linalg.norm(res) <= 1e-3 * FEAS_TOL * (1.0 + np.linalg.norm(b)):
            break
        x = x + Finv_At @ gfac.solve(res)
    if not feasible(A, x, b):
        raise InfeasibleDemand("constraint residual exceeds tolerance")
    return x


class AffineSystem:
    """min over {x : Ax = b}; objective coordinates are x itself."""

    def __init__(self, A, b):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.b = np.asarray(b, dtype=float).reshape(-1)
        if self.A.shape[0] != self.b.size:
            raise ValueError("A and b have inconsistent shapes")
        self.dim = self.A.shape[1]
        self.linear_solves = 0
        self._solver = WeightedLsSolver(self.A)

    def image(self, u):
        return u

    def least_squares(self, w):
        self.linear_solves += 1
        sol = self._solver.factor(w).solve(self.b)
        return sol.x, sol.x

    def direction(self, w, g, target, tol=1e-12):
        self.linear_solves += 1
        self._solver.factor(w)
        sol = _augmented(self._solver, np.asarray(g, dtype=float), target, w, tol)
        return sol.x, sol.x

    def energy(self, w):
        return solve_weighted_ls(self.A, self.b, w).energy


class ResidualSystem:
    """min over {x : Ax = b} with objective coordinates z = Nx - v."""

    def __init__(self, N, v, A=None, b=None):
        self.N = np.atleast_2d(np.asarray(N, dtype=float))
        self.v = np.asarray(v, dtype=float).reshape(-1)
        n = self.N.shape[1]
        self.A = np.zeros((0, n)) if A is None else np.asarray(A, dtype=float).reshape(-1, n)
        self.b = np.zeros(0) if b is None else np.asarray(b, dtype=float).reshape(-1)
        if self.N.shape[0] != self.v.size or self.A.shape[0] != self.b.size:
            raise ValueError("inconsistent shapes")
        self.dim = self.N.shape[0]
        self.linear_solves = 0

    def image(self, x):
        return self.N @ x - self.v

    def least_squares(self, w):
        self.linear_solves += 1
        x = solve_general_structured(self.N, self.v, self.A, self.b, w)
        return x, self.image(x)

    def direction(self, w, g, target, tol=1e-12):
        self.linear_solves += 1
        g = np.asarray(g, dtype=float)
        wf = floor_weights(w)
        y = g / wf
        # the projection is linear; unit scale keeps the feasibility test meaningful
        ny = np.linalg.norm(y)
        if ny == 0:
            if target == 0:
                return np.zeros(self.N.shape[1]), np.zeros(self.dim)
            raise DegenerateDirection("zero gradient")
        y = y / ny
        dx = solve_general_structured(self.N, y, self.A, np.zeros(self.A.shape[0]), w)
        dz = self.N @ dx
        s = float(np.dot(g, dz))
        if s <= tol * float(np.dot(g, y)):
            if target == 0:
                return np.zeros_like(dx), np.zeros_like(dz)
            raise DegenerateDirection("g is orthogonal to every feasible direction")
        return (target / s) * dx, (target / s) * dz

    def energy(self, w):
        z = self.image(solve_general_structured(self.N, self.v, self.A, self.b, w))
        return float(np.dot(w, z * z))


def as_system(A, b=None):
    """Wrap (A, b) in an AffineSystem unless A already is a system."""
    if hasattr(A, "least_squares"):
        return A
    return AffineSystem(A, b)


def energy_of(A, b, w):
    """Energy at weights w for plain (A, b) or a prebuilt system; not counted."""
    if hasattr(A, "energy"):
        return A.energy(np.asarray(w, dtype=float))
    return energy(A, b, w)
