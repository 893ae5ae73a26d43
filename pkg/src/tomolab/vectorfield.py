"""X-ray transform of 2-D vector fields, curl, Helmholtz projection and
matrix-weighted transforms.

The integrand along the line (theta, s) is h . w_perp(theta), where
w_perp = (-sin theta, cos theta) is the line direction.
"""
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, UnsupportedDimensionError, WeightError
from .fields import ScalarField, VectorField, diff1
from .spectral import SpectralPlan
from .xray import Sinogram, backproject, xray_forward


def _check(h):
    if h.grid.dim != 2:
        raise UnsupportedDimensionError("vector tomography is implemented in 2-D only")


def line_directions(lines):
    th = lines.angles
    return -np.sin(th), np.cos(th)


def xray_vector(h, lines):
    """X_1 h(theta, s) = integral of h . w_perp along the line."""
    _check(h)
    d1, d2 = line_directions(lines)
    g1 = xray_forward(ScalarField(h.grid, h.components[0]), lines).values
    g2 = xray_forward(ScalarField(h.grid, h.components[1]), lines).values
    return Sinogram(lines, d1[:, None] * g1 + d2[:, None] * g2)


VectorSinogram = Sinogram


def backproject_vector(g):
    """Adjoint of xray_vector: back-project g w_perp componentwise."""
    d1, d2 = line_directions(g.lines)
    vals = g.filled()
    b1 = backproject(Sinogram(g.lines, d1[:, None] * vals))
    b2 = backproject(Sinogram(g.lines, d2[:, None] * vals))
    return VectorField(g.lines.grid, (b1.values, b2.values))


def normal_vector(h, lines):
    return backproject_vector(xray_vector(h, lines))


def curl2d(h):
    """d1 h2 - d2 h1 with the same central stencils as fields.gradient."""
    _check(h)
    hs = h.grid.spacing
    return ScalarField(h.grid, diff1(h.components[1], 0, hs) - diff1(h.components[0], 1, hs))


def divergence(h):
    hs = h.grid.spacing
    return ScalarField(h.grid, sum(diff1(c, ax, hs) for ax, c in enumerate(h.components)))


@dataclass(frozen=True, eq=False)
class HelmholtzResult:
    solenoidal: VectorField
    potential: ScalarField
    potential_gradient: VectorField
    plan: SpectralPlan
    torus_solenoidal: tuple
    torus_potential: np.ndarray


def helmholtz(h, plan=None):
    """Spectral split h = h_s + grad phi on the padded torus.

    The xi = 0 mode goes to h_s.  ``potential_gradient`` is the spectral
    gradient of phi on the torus, cropped, so h = h_s + grad phi holds to
    rounding.  The torus arrays are kept for periodic checks.
    """
    plan = SpectralPlan(h.grid) if plan is None else plan
    k = plan.wavevector(nyquist=False)
    H = [np.fft.rfftn(plan.pad(c)) for c in h.components]
    k2 = sum(kk * kk for kk in k)
    kdot = sum(kk * Hc for kk, Hc in zip(k, H))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(k2 > 0, kdot / np.where(k2 > 0, k2, 1.0), 0.0)
    shape = plan.shape
    axes = tuple(range(len(shape)))
    hs_t = tuple(np.fft.irfftn(Hc - kk * ratio, s=shape, axes=axes) for kk, Hc in zip(k, H))
    gp_t = tuple(np.fft.irfftn(kk * ratio, s=shape, axes=axes) for kk in k)
    phi_t = np.fft.irfftn(-1j * ratio, s=shape, axes=axes)
    crop = plan.crop
    return HelmholtzResult(
        solenoidal=VectorField(h.grid, tuple(crop(c) for c in hs_t)),
        potential=ScalarField(h.grid, crop(phi_t)),
        potential_gradient=VectorField(h.grid, tuple(crop(c) for c in gp_t)),
        plan=plan, torus_solenoidal=hs_t, torus_potential=phi_t)


@dataclass(frozen=True, eq=False)
class MatrixWeight:
    """Pointwise 2x2 matrices, array of shape (2, 2, n, n)."""

    grid: object
    matrices: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.matrices, dtype=float)
        if A.shape != (2, 2) + self.grid.shape:
            raise ShapeError("matrix weight must have shape (2, 2, n, n)")
        if not np.all(np.isfinite(A)):
            raise WeightError("matrix weight has non-finite entries")
        if self.min_abs_det(A) < 1e-6:
            raise WeightError("matrix weight is singular somewhere (min |det| < 1e-6)")
        object.__setattr__(self, "matrices", A)

    @staticmethod
    def min_abs_det(A):
        return float(np.min(np.abs(A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0])))

    @classmethod
    def constant(cls, grid, M):
        M = np.asarray(M, dtype=float)
        return cls(grid, np.broadcast_to(M[:, :, None, None], (2, 2) + grid.shape).copy())

    @classmethod
    def identity(cls, grid):
        return cls.constant(grid, np.eye(2))

    @classmethod
    def rotation90(cls, grid):
        """Counterclockwise rotation by 90 degrees."""
        return cls.constant(grid, [[0.0, -1.0], [1.0, 0.0]])

    def apply(self, h):
        A = self.matrices
        c = h.components
        return VectorField(h.grid, (A[0, 0] * c[0] + A[0, 1] * c[1], A[1, 0] * c[0] + A[1, 1] * c[1]))

    def inverse(self):
        A = self.matrices
        det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        inv = np.array([[A[1, 1], -A[0, 1]], [-A[1, 0], A[0, 0]]]) / det
        return MatrixWeight(self.grid, inv)


def xray_matrix_weighted(h, A, lines):
    """X_A h = X_1 (A h)."""
    if not isinstance(A, MatrixWeight):
        A = MatrixWeight(h.grid, A)
    if np.all(A.matrices == MatrixWeight.identity(h.grid).matrices):
        return xray_vector(h, lines)
    return xray_vector(A.apply(h), lines)
