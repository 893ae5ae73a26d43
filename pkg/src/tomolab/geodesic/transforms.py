"""Geodesic ray transforms of order m = 0, 1, 2, mixings and the
generalized symmetrization.

Tensor arrays: m = 0 is (n, n), m = 1 is (2, n, n), m = 2 is (2, 2, n, n)
(index order h[i, j], not necessarily symmetric).  The integrand is
h_{i1..im}(gamma) gamma'^{i1} ... gamma'^{im}, gamma' = c^2 p.
"""
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import ConfigurationError, ShapeError, UnsupportedOrderError, WeightError
from ..fields import ScalarField, VectorField
from ..parallel import pmap
from ..vectorfield import MatrixWeight
from .tracing import inward_direction, trace_geodesic


@dataclass(frozen=True, eq=False)
class TensorField2:
    """2-tensor field on a 2-D grid, components (2, 2, n, n)."""

    grid: object
    components: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.components, dtype=float)
        if a.shape != (2, 2) + self.grid.shape:
            raise ShapeError("tensor components must have shape (2, 2, n, n)")
        if not np.all(np.isfinite(a)):
            raise ValueError("tensor field has non-finite entries")
        object.__setattr__(self, "components", a)

    @classmethod
    def from_symmetric(cls, grid, h11, h12, h22):
        v = [np.asarray(getattr(x, "values", x), dtype=float) for x in (h11, h12, h22)]
        return cls(grid, np.array([[v[0], v[1]], [v[1], v[2]]]))

    def symmetrized(self):
        a = self.components
        return TensorField2(self.grid, 0.5 * (a + a.transpose(1, 0, 2, 3)))

    def max_abs(self):
        return float(np.max(np.abs(self.components)))


def _as_array(field):
    if isinstance(field, ScalarField):
        return 0, field.grid, np.real(field.values)
    if isinstance(field, VectorField):
        return 1, field.grid, np.array(field.components, dtype=float)
    if isinstance(field, TensorField2):
        return 2, field.grid, field.components
    raise UnsupportedOrderError("field must be a scalar, vector or 2-tensor field (m <= 2)")


def _wrap(m, grid, a):
    if m == 0:
        return ScalarField(grid, a)
    if m == 1:
        return VectorField(grid, (a[0], a[1]))
    return TensorField2(grid, a)


# ------------------------------------------------------------------- fans

def geodesic_fan(c, n_sources, n_directions, step=0.01):
    """Geodesics from n_sources boundary points, n_directions each.

    Directions are alpha_k = -pi/2 + pi (k + 1/2) / n_directions from the
    inward normal.
    """
    if n_sources < 1 or n_directions < 1:
        raise ConfigurationError("fan sizes must be positive")
    jobs = [(2 * np.pi * i / n_sources, -0.5 * np.pi + np.pi * (k + 0.5) / n_directions)
            for i in range(n_sources) for k in range(n_directions)]

    def one(job):
        phi, a = job
        x0 = c.R * np.array([np.cos(phi), np.sin(phi)])
        return trace_geodesic(c, x0, inward_direction(phi, a), step, check=False)

    return pmap(one, jobs)


def line_fan(c, lines, step=None, reverse=False):
    """Geodesics of a constant profile along the lines (theta, s) of a LineSet.

    Each path enters at s w - t0 w_perp and runs along +w_perp (or -w_perp
    with ``reverse``).  Lines missing the open disk get ``None``.
    """
    R = c.R
    step = 0.5 * lines.grid.spacing if step is None else step
    jobs = []
    for th in lines.angles:
        w = np.array([np.cos(th), np.sin(th)])
        wp = np.array([-np.sin(th), np.cos(th)])
        for s in lines.offsets:
            if abs(s) >= R * (1 - 1e-9):
                jobs.append(None)
                continue
            t0 = np.sqrt(R * R - s * s)
            sgn = -1.0 if reverse else 1.0
            jobs.append((s * w - sgn * t0 * wp, sgn * wp))
    return pmap(lambda j: None if j is None else trace_geodesic(c, j[0], j[1], step, check=False), jobs)


# -------------------------------------------------------------- transform

def _sample(grid, arr, xs):
    coords = [(xs[:, 0] + grid.extent) / grid.spacing, (xs[:, 1] + grid.extent) / grid.spacing]
    return ndimage.map_coordinates(arr, coords, order=1, mode="grid-constant", prefilter=False)


def geodesic_ray_transform(field, paths, c):
    """Trapezoid quadrature of h(gamma)[gamma', .., gamma'] along each path.

    ``None`` entries in ``paths`` give NaN.
    """
    m, grid, a = _as_array(field)
    if grid.dim != 2:
        raise ShapeError("geodesic transforms are 2-D")
    live = [p for p in paths if p is not None]
    out = np.full(len(paths), np.nan)
    if not live:
        return out
    xs = np.concatenate([p.xs for p in live])
    ts = [p.ts for p in live]
    r = np.hypot(xs[:, 0], xs[:, 1])
    v = (c(r) ** 2)[:, None] * np.concatenate([p.ps for p in live])
    if m == 0:
        vals = _sample(grid, a, xs)
    elif m == 1:
        vals = sum(_sample(grid, a[i], xs) * v[:, i] for i in range(2))
    else:
        vals = sum(_sample(grid, a[i, j], xs) * v[:, i] * v[:, j] for i in range(2) for j in range(2))
    res = []
    k = 0
    for t in ts:
        seg = vals[k:k + t.size]
        res.append(np.trapezoid(seg, t) if hasattr(np, "trapezoid") else np.trapz(seg, t))
        k += t.size
    out[[i for i, p in enumerate(paths) if p is not None]] = res
    return out


# ------------------------------------------------------------------ mixing

@dataclass(frozen=True, eq=False)
class Mixing2:
    """Pointwise invertible matrices A1 (and A2 for m = 2)."""

    grid: object
    A1: object
    A2: object = None

    def __post_init__(self):
        for name in ("A1", "A2"):
            A = getattr(self, name)
            if A is None:
                continue
            if not isinstance(A, MatrixWeight):
                A = np.asarray(A, dtype=float)
                if A.shape == (2, 2):
                    A = MatrixWeight.constant(self.grid, A)
                else:
                    A = MatrixWeight(self.grid, A)
            object.__setattr__(self, name, A)

    @classmethod
    def constant(cls, grid, A1, A2=None):
        return cls(grid, A1, A2)

    def _second(self):
        return self.A1 if self.A2 is None else self.A2

    def apply(self, field):
        """(A h)_{ij} = h_{kl} (A1)_{ki} (A2)_{lj}."""
        m, grid, a = _as_array(field)
        A1 = self.A1.matrices
        if m == 1:
            return _wrap(1, grid, np.einsum("k...,ki...->i...", a, A1))
        if m == 2:
            A2 = self._second().matrices
            return _wrap(2, grid, np.einsum("kl...,ki...,lj...->ij...", a, A1, A2))
        raise UnsupportedOrderError("mixings act on m = 1 or m = 2")

    def inverse(self):
        return Mixing2(self.grid, self.A1.inverse(), None if self.A2 is None else self.A2.inverse())


def mixing_ray_transform(field, A, paths, c):
    """I_A h = I_m (A h)."""
    if not isinstance(A, Mixing2):
        raise WeightError("A must be a Mixing2")
    return geodesic_ray_transform(A.apply(field), paths, c)


def symmetrize_A(field, A):
    """A^-1 sigma (A h); sigma is the identity for m = 1."""
    m, grid, a = _as_array(field)
    if m == 1:
        return field
    if m != 2:
        raise UnsupportedOrderError("symmetrize_A acts on m = 1 or m = 2")
    return A.inverse().apply(A.apply(field).symmetrized())


def transverse_mixing(grid):
    """Mixing by the counterclockwise 90 degree rotation (m = 1)."""
    return Mixing2(grid, MatrixWeight.rotation90(grid))
