"""Dense fractional Schrodinger sandbox: exterior Dirichlet problems,
DN maps between exterior patches, the Alessandrini identity, Runge
approximation and a linearized potential recovery.

All pairings are plain sums over grid cells, which makes the discrete
Alessandrini identity exact: for real symmetric A + diag(q),
    f2 . (L1 - L2) f1 = sum_Omega (q1 - q2) u1 u2.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import (ConfigurationError, ConvergenceError, DirichletEigenvalueError, DomainError,
                     ShapeError, SizeError)
from .fields import RegionMask, ScalarField, diff1
from .fractional import FracExponent, fractional_laplacian
from .parallel import pmap
from .spectral import SpectralPlan

MAX_UNKNOWNS = 1024
SINGULAR_RATIO = 1e-12


@dataclass(frozen=True, eq=False)
class FracOperatorMatrix:
    grid: object
    s: float
    plan: SpectralPlan
    matrix: np.ndarray
    symmetry_defect: float

    @property
    def N(self):
        return self.matrix.shape[0]


def assemble_fractional_matrix(grid, s, plan=None):
    """Dense matrix of (-Lap)^s, column j = fractional_laplacian(e_j)."""
    if grid.dim != 2:
        raise ShapeError("the Calderon sandbox is two-dimensional")
    if grid.size > MAX_UNKNOWNS:
        raise SizeError(f"N = {grid.size} exceeds the dense cap {MAX_UNKNOWNS}")
    ex = FracExponent(s, grid.dim)
    if ex.s <= 0:
        raise DomainError("the Calderon operator needs s > 0")
    plan = SpectralPlan(grid) if plan is None else plan

    def column(j):
        e = np.zeros(grid.size)
        e[j] = 1.0
        return fractional_laplacian(ScalarField(grid, e.reshape(grid.shape)), ex.s, plan).values.ravel()

    M = np.column_stack(pmap(column, range(grid.size)))
    defect = float(np.linalg.norm(M - M.T) / np.linalg.norm(M))
    return FracOperatorMatrix(grid, ex.s, plan, 0.5 * (M + M.T), defect)


@dataclass(frozen=True, eq=False)
class DomainSplit:
    omega: RegionMask
    W1: RegionMask
    W2: RegionMask

    def __post_init__(self):
        g = self.omega.grid
        if self.omega.is_empty():
            raise ConfigurationError("Omega must be nonempty")
        ring = np.zeros(g.shape, bool)
        ring[0, :] = ring[-1, :] = ring[:, 0] = ring[:, -1] = True
        if np.any(self.omega.inside & ring):
            raise ConfigurationError("Omega must lie strictly inside the grid")
        for name, W in (("W1", self.W1), ("W2", self.W2)):
            if W.is_empty():
                raise ConfigurationError(f"{name} must be nonempty")
            if np.any(W.inside & self.omega.inside):
                raise ConfigurationError(f"{name} must be disjoint from Omega")

    @property
    def exterior(self):
        return self.omega.complement()

    @property
    def grid(self):
        return self.omega.grid

    def indices(self):
        return (np.flatnonzero(self.omega.inside.ravel()), np.flatnonzero(~self.omega.inside.ravel()))

    def digests(self):
        return {"omega": self.omega.digest(), "W1": self.W1.digest(), "W2": self.W2.digest()}


@dataclass(frozen=True, eq=False)
class Perturbation:
    """Order 0: u -> q u.  Order 1: u -> b1 d1 u + b2 d2 u (central differences).

    Coefficients are clipped to Omega.
    """

    order: int
    omega: RegionMask
    q: object = None
    b: tuple = field(default=())

    def __post_init__(self):
        if self.order not in (0, 1):
            raise ConfigurationError("perturbation order must be 0 or 1")
        m = self.omega.inside
        if self.order == 0:
            q = np.zeros(m.shape) if self.q is None else np.real(getattr(self.q, "values", self.q))
            object.__setattr__(self, "q", np.where(m, q, 0.0))
        else:
            if len(self.b) != 2:
                raise ConfigurationError("first-order perturbations need two drift coefficients")
            b = tuple(np.where(m, np.real(getattr(c, "values", c)), 0.0) for c in self.b)
            object.__setattr__(self, "b", b)

    @classmethod
    def zero(cls, omega):
        return cls(0, omega)

    def matrix(self, grid):
        """Dense N x N matrix of the perturbation (rows vanish off Omega)."""
        N = grid.size
        if self.order == 0:
            return np.diag(self.q.ravel())
        M = np.zeros((N, N))
        eye = np.eye(N)
        for ax in range(2):
            D = np.column_stack([diff1(eye[:, j].reshape(grid.shape), ax, grid.spacing).ravel()
                                 for j in range(N)])
            M += self.b[ax].ravel()[:, None] * D
        return M

    def spec(self):
        if self.order == 0:
            return {"order": 0, "q_max": float(np.abs(self.q).max())}
        return {"order": 1, "b_max": [float(np.abs(c).max()) for c in self.b]}


class ExteriorSolver:
    """Factorized interior block of A + P for one perturbation."""

    def __init__(self, As, split, pert=None, check_s=True):
        grid = As.grid
        if split.grid != grid:
            raise ShapeError("split grid does not match the operator grid")
        pert = Perturbation.zero(split.omega) if pert is None else pert
        if pert.order == 1 and check_s and not 2 * As.s > 1:
            raise DomainError("first-order perturbations require 2 s > 1")
        self.As, self.split, self.pert = As, split, pert
        self.full = As.matrix + pert.matrix(grid)
        self.iO, self.iE = split.indices()
        self.K = self.full[np.ix_(self.iO, self.iO)]
        self.C = self.full[np.ix_(self.iO, self.iE)]
        sv = np.linalg.svd(self.K, compute_uv=False)
        self.sigma_min, self.sigma_max = float(sv[-1]), float(sv[0])
        if self.sigma_min <= SINGULAR_RATIO * self.sigma_max:
            raise DirichletEigenvalueError(
                f"0 is (numerically) a Dirichlet eigenvalue: sigma_min/sigma_max = "
                f"{self.sigma_min / self.sigma_max:.3e}")
        self.lu = linalg.lu_factor(self.K)

    def solve(self, f, tol=None):
        """u with u = f on the exterior and (A + P) u = 0 on Omega.

        ``f`` is a full-grid array (only exterior entries are used) or a
        matrix of such columns (N x k).  ``tol`` switches to an iteration with that
        relative tolerance: Richardson iteration with step 1/lambda_max on a
        symmetric positive definite block.  The error then contracts
        monotonically along the lowest mode, so it ends proportional to ``tol``.
        """
        grid = self.As.grid
        F = np.asarray(f, dtype=float)
        single = F.ndim != 2 or F.shape == grid.shape
        if single:
            F = F.reshape(grid.size, 1)
        rhs = -self.C @ F[self.iE]
        if tol is None:
            uO = linalg.lu_solve(self.lu, rhs)
        else:
            uO = np.column_stack([self._richardson(rhs[:, k], tol) for k in range(rhs.shape[1])])
        U = F.copy()
        U[self.iO] = uO
        return U[:, 0].reshape(grid.shape) if single else U

    def _richardson(self, b, tol, max_iter=100000):
        if not hasattr(self, "_spectrum"):
            ev = np.linalg.eigvalsh(0.5 * (self.K + self.K.T))
            self._spectrum = (float(ev[0]), float(ev[-1]))
        lo, hi = self._spectrum
        if lo <= 0:
            raise ConfigurationError("iterative solve needs a positive definite interior block")
        omega = 1.0 / hi
        x = np.zeros_like(b)
        r = b.copy()
        bn = np.linalg.norm(b)
        for it in range(max_iter):
            if np.linalg.norm(r) <= tol * bn:
                return x
            x += omega * r
            r = b - self.K @ x
        raise ConvergenceError("Richardson iteration did not converge",
                               residual=float(np.linalg.norm(r) / bn), iterations=max_iter)

    def interior_residual(self, u):
        r = (self.full @ np.asarray(u).ravel())[self.iO]
        scale = np.linalg.norm(self.full[self.iO] @ np.abs(np.asarray(u).ravel())) or 1.0
        return float(np.linalg.norm(r) / scale)


def solve_exterior_problem(As, split, pert, f, tol=None):
    solver = ExteriorSolver(As, split, pert)
    F = np.asarray(getattr(f, "values", f), dtype=float)
    u = solver.solve(F, tol=tol)
    return ScalarField(As.grid, u)


def basis_columns(grid, mask):
    idx = np.flatnonzero(mask.inside.ravel())
    E = np.zeros((grid.size, idx.size))
    E[idx, np.arange(idx.size)] = 1.0
    return E


def dn_map(As, split, pert=None, solver=None):
    """Matrix (|W2| x |W1|): column j is ((A + P) u_{e_j}) on W2."""
    solver = ExteriorSolver(As, split, pert) if solver is None else solver
    E = basis_columns(As.grid, split.W1)
    U = solver.solve(E)
    rows = np.flatnonzero(split.W2.inside.ravel())
    return (solver.full @ U)[rows]


def dn_apply(solver, f, g):
    """g . ((A + P) u_f) summed over the exterior."""
    u = solver.solve(f).ravel()
    iE = solver.iE
    return float(np.asarray(g).ravel()[iE] @ (solver.full @ u)[iE])


def alessandrini_residual(As, split, pert1, pert2, pairs, tol=None):
    """Max over pairs of |LHS - RHS| / scale for the identity
    f2 . (L1 - L2) f1 = sum_Omega (q1 - q2) u1 u2.

    LHS is computed from exterior currents, RHS from interior products.
    """
    if pert1.order != 0 or pert2.order != 0:
        raise DomainError("the Alessandrini check is implemented for potentials")
    s1 = ExteriorSolver(As, split, pert1)
    s2 = ExteriorSolver(As, split, pert2)
    iE, iO = s1.iE, s1.iO
    out = []
    for f1, f2 in pairs:
        f1 = np.asarray(f1, dtype=float).ravel()
        f2 = np.asarray(f2, dtype=float).ravel()
        u1 = s1.solve(f1, tol=tol).ravel()
        u1b = s2.solve(f1, tol=tol).ravel()
        u2 = s2.solve(f2, tol=tol).ravel()
        lhs = f2[iE] @ ((s1.full @ u1)[iE] - (s2.full @ u1b)[iE])
        dq = (pert1.q - pert2.q).ravel()
        rhs = float(np.sum(dq[iO] * u1[iO] * u2[iO]))
        scale = float(np.sum(np.abs(dq[iO] * u1[iO] * u2[iO]))) or 1.0
        out.append({"lhs": float(lhs), "rhs": rhs, "scale": scale})
    res = max(abs(o["lhs"] - o["rhs"]) / o["scale"] for o in out) if out else 0.0
    return res, out


def runge_demo(As, split, target, n_exterior_basis=None):
    """Relative L2(Omega) error of the best fit of ``target`` by
    {u_{e_j}|_Omega : j < k}, for k = 1 .. n, with e_j the W1 cells in
    ravel order."""
    solver = ExteriorSolver(As, split)
    E = basis_columns(As.grid, split.W1)
    n = E.shape[1] if n_exterior_basis is None else min(int(n_exterior_basis), E.shape[1])
    U = solver.solve(E[:, :n])[solver.iO]
    t = np.real(getattr(target, "values", target)).ravel()[solver.iO]
    tn = np.linalg.norm(t)
    if tn == 0:
        return np.zeros(n)
    # Gram-Schmidt in W1 order keeps the nesting of the spans
    basis = []
    r = t.copy()
    err = np.empty(n)
    for k in range(n):
        v = U[:, k].copy()
        v0 = np.linalg.norm(v)
        for _ in range(2):
            for q in basis:
                v -= (q @ v) * q
        nv = np.linalg.norm(v)
        if v0 > 0 and nv > 1e-12 * v0:
            q = v / nv
            basis.append(q)
            r -= (q @ r) * q
        err[k] = np.linalg.norm(r) / tn
    return err


def linearized_matrix(As, split, solver0=None):
    """Rows (j, i): Omega-products u0_{e_i} u0_{e_j}, e_i on W1, e_j on W2."""
    solver0 = ExteriorSolver(As, split) if solver0 is None else solver0
    U1 = solver0.solve(basis_columns(As.grid, split.W1))[solver0.iO]
    U2 = solver0.solve(basis_columns(As.grid, split.W2))[solver0.iO]
    return np.einsum("ai,aj->jia", U1, U2).reshape(U2.shape[1] * U1.shape[1], -1)


def recover_potential_linearized(As, split, dn_measured, lam_reg, dn_reference=None):
    """Tikhonov solution of M q = vec(L_measured - L_0).

    ``lam_reg`` is relative: the penalty is lam_reg * ||M||_2^2 ||q||^2.
    """
    solver0 = ExteriorSolver(As, split)
    L0 = dn_map(As, split, solver=solver0) if dn_reference is None else dn_reference
    M = linearized_matrix(As, split, solver0)
    d = (np.asarray(dn_measured) - L0).ravel()
    Ms = np.linalg.norm(M, 2)
    lam = lam_reg * Ms * Ms
    A = M.T @ M + lam * np.eye(M.shape[1])
    qO = np.linalg.solve(A, M.T @ d)
    q = np.zeros(As.grid.size)
    q[solver0.iO] = qO
    residual = float(np.linalg.norm(M @ qO - d) / (np.linalg.norm(d) or 1.0))
    return ScalarField(As.grid, q.reshape(As.grid.shape)), residual
