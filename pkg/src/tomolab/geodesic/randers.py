"""Randers boundary distances d_F = d_g + int beta for closed beta, and the
first-order Zermelo one-form beta = -W / c^2.

Line integrals of beta use the trigonometric interpolant of its grid
samples (period n h, Nyquist mode dropped) along cubic Hermite
interpolants of the traced paths, with 4-point Gauss-Legendre per step.
If beta is the spectral gradient of phi, the interpolant of beta is the
exact gradient of the interpolant of phi, so int beta = phi(x') - phi(x)
up to quadrature rounding.
"""
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, NotClosedError, NotFinslerError, PerturbationRegimeError, ShapeError
from ..fields import ScalarField, VectorField, spectral_gradient
from ..spectral import spectral_curl2d
from .tracing import BoundaryDistanceMap, boundary_distance_map, reference_paths

CLOSED_TOL = 1e-8
ZERMELO_RATIO = 0.1

_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)


@dataclass(frozen=True, eq=False)
class OneForm:
    """beta = beta_1 dx_1 + beta_2 dx_2 on a 2-D grid.

    ``closed`` is computed: spectral curl <= 1e-8 max|beta|.
    """

    grid: object
    components: tuple

    def __post_init__(self):
        comps = tuple(np.asarray(getattr(b, "values", b), dtype=float) for b in self.components)
        if len(comps) != 2 or any(b.shape != self.grid.shape for b in comps):
            raise ShapeError("a one-form needs two components on the grid")
        if not all(np.all(np.isfinite(b)) for b in comps):
            raise ValueError("one-form has non-finite entries")
        object.__setattr__(self, "components", comps)
        curl = spectral_curl2d(comps, self.grid.spacing)
        scale = self.max_abs()
        object.__setattr__(self, "curl_max", float(np.max(np.abs(curl))))
        object.__setattr__(self, "closed", bool(self.curl_max <= CLOSED_TOL * scale) if scale > 0 else True)

    @classmethod
    def exact(cls, phi):
        """beta = d phi (spectral gradient)."""
        return cls(phi.grid, spectral_gradient(phi).components)

    @classmethod
    def zero(cls, grid):
        return cls(grid, (np.zeros(grid.shape), np.zeros(grid.shape)))

    def max_abs(self):
        return float(max(np.max(np.abs(b)) for b in self.components))

    def __add__(self, other):
        return OneForm(self.grid, tuple(a + b for a, b in zip(self.components, other.components)))

    def scaled(self, k):
        return OneForm(self.grid, tuple(k * a for a in self.components))

    def dual_norm_max(self, c):
        """max over cells with r <= R of c(r) |beta|, the F_g^* norm for g = c^-2 e."""
        r = self.grid.radius()
        inside = r <= c.R
        mag = np.hypot(*self.components)
        return float(np.max((c(np.minimum(r, c.R)) * mag)[inside]))


class TrigInterpolant:
    """Trigonometric interpolant of periodic samples on the grid torus."""

    def __init__(self, values, grid, chunk=4096):
        n = grid.n
        F = np.fft.fft2(np.asarray(values, dtype=float)) / n ** 2
        if n % 2 == 0:
            F[n // 2, :] = 0.0
            F[:, n // 2] = 0.0
        self.F = F
        self.grid = grid
        self.freq = np.fft.fftfreq(n) * n
        self.period = n * grid.spacing
        self.chunk = chunk

    def __call__(self, pts):
        pts = np.atleast_2d(pts)
        out = np.empty(len(pts))
        w = 2j * np.pi * self.freq / self.period
        L = self.grid.extent
        for a in range(0, len(pts), self.chunk):
            p = pts[a:a + self.chunk]
            Ex = np.exp(np.outer(p[:, 0] + L, w))
            Ey = np.exp(np.outer(p[:, 1] + L, w))
            out[a:a + self.chunk] = np.real(np.sum((Ex @ self.F) * Ey, axis=1))
        return out


def _hermite_gauss(path, c):
    """Gauss points, tangents and weights of the C^1 cubic through the RK4 nodes."""
    x = path.xs
    r = np.hypot(x[:, 0], x[:, 1])
    v = (c(r) ** 2)[:, None] * path.ps
    dt = np.diff(path.ts)[:, None]
    x0, x1, v0, v1 = x[:-1], x[1:], v[:-1], v[1:]
    pts, tans, wts = [], [], []
    for gx, gw in zip(_GL_X, _GL_W):
        s = 0.5 * (gx + 1)
        h00, h10, h01, h11 = 2 * s**3 - 3 * s**2 + 1, s**3 - 2 * s**2 + s, -2 * s**3 + 3 * s**2, s**3 - s**2
        d00, d10, d01, d11 = 6 * s**2 - 6 * s, 3 * s**2 - 4 * s + 1, -6 * s**2 + 6 * s, 3 * s**2 - 2 * s
        pts.append(h00 * x0 + h10 * dt * v0 + h01 * x1 + h11 * dt * v1)
        # d/dt of the cubic in the physical parameter
        tans.append((d00 * x0 + d10 * dt * v0 + d01 * x1 + d11 * dt * v1) / dt)
        wts.append(0.5 * gw * dt[:, 0])
    return np.concatenate(pts), np.concatenate(tans), np.concatenate(wts)


def line_integral(beta, paths, c, interps=None):
    """int_gamma beta for each path."""
    I1, I2 = interps if interps is not None else [TrigInterpolant(b, beta.grid) for b in beta.components]
    out = []
    for p in paths:
        x, t, w = _hermite_gauss(p, c)
        out.append(float(np.sum(w * (I1(x) * t[:, 0] + I2(x) * t[:, 1]))))
    return np.array(out)


def randers_boundary_map(c, beta, m, step=0.01, paths=None):
    """Oriented distances d_F(x_i, x_j) = d_g(x_i, x_j) + int_{gamma_ij} beta.

    Requires a closed beta with max c |beta| < 1 on the disk.
    """
    if beta.grid.dim != 2 or beta.grid.extent < c.R:
        raise ConfigurationError("the one-form grid must cover the disk")
    if not beta.closed:
        raise NotClosedError(f"beta is not closed (curl {beta.curl_max:.3g}); only closed forms are supported")
    nrm = beta.dual_norm_max(c)
    if not nrm < 1:
        raise NotFinslerError(f"dual norm bound violated: max c|beta| = {nrm:.4g} >= 1")
    paths = reference_paths(c, m, step) if paths is None else paths
    D = boundary_distance_map(c, m, step, paths=paths)
    interps = [TrigInterpolant(b, beta.grid) for b in beta.components]
    B = np.zeros((m, m))
    for i in range(m):
        phi = 2 * np.pi * i / m
        rot = [p.rotated(phi) for p in paths]
        vals = line_integral(beta, rot, c, interps)
        for k, val in enumerate(vals, start=1):
            B[i, (i + k) % m] = val
    return BoundaryDistanceMap(D.angles, D.d + B, c.R)


def zermelo_first_order(c, W):
    """beta = -W / c^2 for a slow flow |W| <= 0.1 c."""
    if not isinstance(W, VectorField) or W.grid.dim != 2:
        raise ShapeError("W must be a 2-D vector field")
    r = W.grid.radius()
    cv = c(np.minimum(r, c.R))
    ratio = np.hypot(*W.components) / cv
    if np.max(ratio) > ZERMELO_RATIO:
        raise PerturbationRegimeError(f"|W|/c = {np.max(ratio):.3g} exceeds {ZERMELO_RATIO}")
    return OneForm(W.grid, tuple(-w / cv ** 2 for w in W.components))


def gaussian_potential(grid, center, sigma, amplitude=1.0):
    """phi = a exp(-|x - x0|^2 / 2 sigma^2) on the grid, plus a callable for exact values."""
    X, Y = grid.mesh()

    def func(pts):
        pts = np.atleast_2d(pts)
        return amplitude * np.exp(-((pts[:, 0] - center[0]) ** 2 + (pts[:, 1] - center[1]) ** 2) / (2 * sigma ** 2))

    vals = amplitude * np.exp(-((X - center[0]) ** 2 + (Y - center[1]) ** 2) / (2 * sigma ** 2))
    return ScalarField(grid, vals), func
