"""Partial-data tomography: lines through an open set V, stacked rank
tests under P(D)|_V constraints, and Tikhonov reconstructions.

Vector problems use a stream function psi with h = (d2 psi, -d1 psi)
(central differences), so the unknown is the solenoidal part only and
the curl of h is the discrete -Lap psi.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .errors import ConfigurationError, ConvergenceError, ShapeError, SizeError
from .fields import (PolyOperator, RegionMask, ScalarField, VectorField, apply_poly_operator,
                     diff1, rot_gradient)
from .fractional import normalized, singular_summary, stack_complex
from .xray import Sinogram, lines_through_region, xray_matrix

MU_OVER_LAMBDA = 1e4
MAX_ITER = 5000


@dataclass(frozen=True, eq=False)
class PartialProblem:
    grid: object
    V: RegionMask
    lines: object
    constraint: PolyOperator = field(default_factory=PolyOperator.identity)
    kind: str = "scalar"
    lam: float = 1e-8
    restrict: bool = True

    def __post_init__(self):
        if self.kind not in ("scalar", "vector"):
            raise ConfigurationError("kind must be 'scalar' or 'vector'")
        if self.lam < 0:
            raise ConfigurationError("regularization must be >= 0")
        if self.V.grid != self.grid or self.lines.grid != self.grid:
            raise ShapeError("grid mismatch in partial problem")
        if self.V.is_empty():
            raise ConfigurationError("V must be nonempty")
        if not self.flags.any():
            raise ConfigurationError("no line meets V")

    @property
    def flags(self):
        if not self.restrict:
            return np.ones(self.lines.shape, dtype=bool)
        if "_flags" not in self.__dict__:
            object.__setattr__(self, "_flags", lines_through_region(self.lines, self.V))
        return self.__dict__["_flags"]

    @property
    def mu(self):
        return MU_OVER_LAMBDA * self.lam

    def manifest(self):
        return {"grid": self.grid.to_dict(), "mask_digest": self.V.digest(),
                "n_angles": int(self.lines.angles.size), "n_offsets": int(self.lines.offsets.size),
                "constraint": self.constraint.to_json(), "lambda": self.lam, "mu": self.mu,
                "kind": self.kind, "flagged_lines": int(self.flags.sum())}


def restrict_sinogram(g, V):
    """Mark lines not meeting V as missing (NaN)."""
    flags = lines_through_region(g.lines, V)
    return Sinogram(g.lines, np.where(flags, g.values, np.nan))


# ---------------------------------------------------------------- operators

def _poly_matrix(grid, P, rows_mask):
    """Dense rows of P(D) (complex) on the cells of rows_mask."""
    cols = []
    for j in range(grid.size):
        e = np.zeros(grid.size)
        e[j] = 1.0
        cols.append(apply_poly_operator(ScalarField(grid, e.reshape(grid.shape)), P).values.ravel())
    return np.column_stack(cols)[rows_mask.ravel()]


def _rot_gradient_matrix(grid):
    """Sparse map psi -> (h1, h2) stacked, h = (d2 psi, -d1 psi)."""
    n, h = grid.n, grid.spacing
    eye = sparse.identity(n, format="csr")
    d = sparse.csr_matrix(np.column_stack([diff1(np.eye(n)[:, j], 0, h) for j in range(n)]))
    d_axis0 = sparse.kron(d, eye)
    d_axis1 = sparse.kron(eye, d)
    return sparse.vstack([d_axis1, -d_axis0]).tocsr()


def _curl_matrix(grid):
    """Sparse map (h1, h2) -> d1 h2 - d2 h1."""
    n, h = grid.n, grid.spacing
    eye = sparse.identity(n, format="csr")
    d = sparse.csr_matrix(np.column_stack([diff1(np.eye(n)[:, j], 0, h) for j in range(n)]))
    return sparse.hstack([-sparse.kron(eye, d), sparse.kron(d, eye)]).tocsr()


def _gradient_matrix(grid):
    n, h = grid.n, grid.spacing
    eye = sparse.identity(n, format="csr")
    d = sparse.csr_matrix(np.column_stack([diff1(np.eye(n)[:, j], 0, h) for j in range(n)]))
    return sparse.vstack([sparse.kron(d, eye), sparse.kron(eye, d)]).tocsr()


def vector_xray_matrix(lines):
    A = xray_matrix(lines)
    th = lines.angles
    d1 = np.repeat(-np.sin(th), lines.offsets.size)
    d2 = np.repeat(np.cos(th), lines.offsets.size)
    return sparse.hstack([sparse.diags(d1) @ A, sparse.diags(d2) @ A]).tocsr()


def boundary_ring(grid):
    m = np.zeros(grid.shape, dtype=bool)
    m[0, :] = m[-1, :] = m[:, 0] = m[:, -1] = True
    return m


def _system(p):
    """Data operator, constraint rows on V, and the unknown -> field map."""
    grid = p.grid
    rows = p.flags.ravel()
    if p.kind == "scalar":
        A = xray_matrix(p.lines)[rows]
        B = _poly_matrix(grid, p.constraint, p.V.inside)
        return A, B, None
    G = _rot_gradient_matrix(grid)
    A = (vector_xray_matrix(p.lines) @ G)[rows]
    curl_of_psi = (_curl_matrix(grid) @ G).toarray()
    Pm = _poly_matrix(grid, p.constraint, np.ones(grid.shape, bool))
    B = (Pm @ curl_of_psi)[p.V.inside.ravel()]
    return A, B, G


def combined_rank_test(p):
    """Extreme singular values of [X on flagged lines ; P(D) rows on V (; gauge)]."""
    grid = p.grid
    if grid.n > 24:
        raise SizeError("dense assembly is limited to n_per_axis <= 24")
    A, B, _ = _system(p)
    blocks = [normalized(A.toarray()), normalized(stack_complex(B))]
    if p.kind == "vector":
        ring = np.flatnonzero(boundary_ring(grid).ravel())
        gauge = np.zeros((ring.size, grid.size))
        gauge[np.arange(ring.size), ring] = 1.0
        blocks.append(gauge)
    M = np.vstack([b[np.any(b != 0, axis=1)] for b in blocks])
    out = singular_summary(M)
    out.update(n_unknowns=int(grid.size), n_equations=int(M.shape[0]),
               flagged_lines=int(p.flags.sum()), kind=p.kind)
    return out


# ----------------------------------------------------------- reconstruction

@dataclass(frozen=True, eq=False)
class Reconstruction:
    field: object
    unknown: np.ndarray
    iterations: int
    residual: float
    data_residual: float
    zero_data_residual: float
    constraint_residual: float


def conjugate_gradient(apply, b, tol=1e-12, max_iter=MAX_ITER):
    """Plain CG for a symmetric positive definite operator."""
    x = np.zeros_like(b)
    r = b.copy()
    d = r.copy()
    rr = float(r @ r)
    bnorm = np.sqrt(float(b @ b))
    if bnorm == 0:
        return x, 0, 0.0
    for it in range(1, max_iter + 1):
        Ad = apply(d)
        alpha = rr / float(d @ Ad)
        x += alpha * d
        r -= alpha * Ad
        rr_new = float(r @ r)
        if np.sqrt(rr_new) <= tol * bnorm:
            return x, it, np.sqrt(rr_new) / bnorm
        d = r + (rr_new / rr) * d
        rr = rr_new
    raise ConvergenceError(f"CG did not converge in {max_iter} iterations",
                           residual=np.sqrt(rr) / bnorm, iterations=max_iter)


def reconstruct_partial(p, data, tol=1e-12, max_iter=MAX_ITER):
    """Minimize ||X u - data||^2 + mu ||P(D) u||_V^2 + lam ||u||_{H1}^2.

    ``u`` is f (scalar) or the stream function psi (vector).  Norms use
    the sinogram weights dtheta ds and cell weights h^2.  Solved by CG on
    the normal equations.
    """
    grid = p.grid
    if data.lines is not p.lines and data.values.shape != p.lines.shape:
        raise ShapeError("data must live on the problem's line set")
    flags = p.flags
    present = ~np.isnan(data.values)
    if np.any(flags & ~present):
        raise ShapeError("data missing on a line that meets V")
    A, B, G = _system(p)
    Bs = stack_complex(B)
    Dg = _gradient_matrix(grid)
    ws = p.lines.dtheta * p.lines.ds
    wc = grid.spacing ** 2
    d = np.where(present, data.values, 0.0)[flags]
    BtB = Bs.T @ Bs

    def normal(u):
        return (ws * (A.T @ (A @ u)) + p.mu * wc * (BtB @ u)
                + p.lam * wc * (u + Dg.T @ (Dg @ u)))

    rhs = ws * (A.T @ d)
    u, iters, res = conjugate_gradient(normal, rhs, tol=tol, max_iter=max_iter)
    if p.kind == "scalar":
        fld = ScalarField(grid, u.reshape(grid.shape))
    else:
        fld = rot_gradient(ScalarField(grid, u.reshape(grid.shape)))
    return Reconstruction(
        field=fld, unknown=u, iterations=iters, residual=res,
        data_residual=float(np.sqrt(ws) * np.linalg.norm(A @ u - d)),
        zero_data_residual=float(np.sqrt(ws) * np.linalg.norm(d)),
        constraint_residual=float(np.linalg.norm(Bs @ u)))


def forward_data(p, truth):
    """Noise-free data of a scalar field or a stream function on all lines."""
    grid = p.grid
    if p.kind == "scalar":
        vals = xray_matrix(p.lines) @ np.real(truth.values).ravel()
    else:
        vals = vector_xray_matrix(p.lines) @ (_rot_gradient_matrix(grid) @ np.real(truth.values).ravel())
    return Sinogram(p.lines, vals.reshape(p.lines.shape))


def pseudo_inverse_solution(p, data):
    """Dense SVD oracle for the unregularized constrained least squares."""
    A, B, _ = _system(p)
    ws = p.lines.dtheta * p.lines.ds
    d = np.where(np.isnan(data.values), 0.0, data.values)[p.flags]
    M = np.vstack([np.sqrt(ws) * A.toarray(), stack_complex(B)])
    rhs = np.concatenate([np.sqrt(ws) * d, np.zeros(M.shape[0] - d.size)])
    return np.linalg.lstsq(M, rhs, rcond=None)[0]


def curl_on_V(recon, p):
    h = recon.field if isinstance(recon.field, VectorField) else None
    if h is None:
        raise ConfigurationError("curl_on_V applies to vector reconstructions")
    from .vectorfield import curl2d
    return curl2d(h).values[p.V.inside]
