"""Parallel-beam X-ray transform of 2-D scalar fields.

A line is named by (theta, s): the set {s w + t w_perp}, with
w = (cos theta, sin theta) and w_perp = (-sin theta, cos theta).
Angles cover [0, pi) once.  Back-projection weights each angle by
2 pi / n_angles, i.e. it integrates over both orientations of every
line, so that the normal operator approximates 2 (f * 1/|x|).
"""
from dataclasses import dataclass
from functools import cached_property
from math import ceil, sqrt

import numpy as np
from scipy import ndimage, sparse
from scipy.signal import fftconvolve

from .errors import InsufficientDataError, ShapeError, UnsupportedDimensionError
from .fields import ScalarField
from .parallel import pmap


@dataclass(frozen=True, eq=False)
class LineSet:
    grid: object
    angles: np.ndarray
    offsets: np.ndarray
    full_circle: bool = False

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float)
        s = np.asarray(self.offsets, dtype=float)
        top = 2 * np.pi if self.full_circle else np.pi
        if a.ndim != 1 or s.ndim != 1 or a.size == 0 or s.size < 2:
            raise ShapeError("angles and offsets must be non-empty 1-D sequences")
        if np.any(np.diff(a) <= 0) or a[0] < 0 or a[-1] >= top:
            raise ShapeError("angles must be strictly increasing within [0, pi)")
        if not np.allclose(s, -s[::-1], atol=1e-12):
            raise ShapeError("offsets must be symmetric about 0")
        ds = np.diff(s)
        if not np.allclose(ds, ds[0]):
            raise ShapeError("offsets must be uniform")
        object.__setattr__(self, "angles", a)
        object.__setattr__(self, "offsets", s)

    @property
    def shape(self):
        return (self.angles.size, self.offsets.size)

    @property
    def n_lines(self):
        return self.angles.size * self.offsets.size

    @property
    def ds(self):
        return float(self.offsets[1] - self.offsets[0])

    @property
    def dtheta(self):
        """Angular weight per sample, counting both line orientations."""
        span = 2 * np.pi if not self.full_circle else 4 * np.pi
        return span / self.angles.size

    @cached_property
    def t_samples(self):
        """Quadrature nodes along each line, step h/2 covering the square."""
        step = 0.5 * self.grid.spacing
        k = int(ceil(self.grid.extent * sqrt(2.0) / step))
        return step * np.arange(-k, k + 1)

    def sample_points(self, k):
        """Points (2, n_offsets, n_t) on all lines of angle index k."""
        th = self.angles[k]
        w = np.array([np.cos(th), np.sin(th)])
        wp = np.array([-np.sin(th), np.cos(th)])
        s = self.offsets[:, None]
        t = self.t_samples[None, :]
        return np.stack([s * w[0] + t * wp[0], s * w[1] + t * wp[1]])


def default_lines(grid, n_angles, n_offsets=None, oversample=1):
    """Uniform angles k pi / n and offsets spanning [-L sqrt 2, L sqrt 2].

    The default offset count gives a spacing just under h / oversample.
    """
    if grid.dim != 2:
        raise UnsupportedDimensionError("the X-ray transform is implemented in 2-D only")
    if n_offsets is None:
        n_offsets = 2 * int(ceil(oversample * grid.extent * sqrt(2.0) / grid.spacing)) + 1
    smax = grid.extent * sqrt(2.0)
    return LineSet(grid, np.pi * np.arange(n_angles) / n_angles, np.linspace(-smax, smax, n_offsets))


@dataclass(frozen=True, eq=False)
class Sinogram:
    lines: LineSet
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.lines.shape:
            raise ShapeError(f"sinogram shape {v.shape} does not match lines {self.lines.shape}")
        if not np.all(np.isfinite(v) | self.missing_of(v)):
            raise ShapeError("sinogram contains non-finite entries")
        object.__setattr__(self, "values", v)

    @staticmethod
    def missing_of(v):
        return np.isnan(v)

    @property
    def missing(self):
        return np.isnan(self.values)

    def filled(self):
        """Values with missing entries excluded (set to 0 only for arithmetic)."""
        return np.where(self.missing, 0.0, self.values)


def sinogram_inner(a, b):
    """Pairing sum g1 g2 dtheta ds over entries present in both."""
    va, vb = np.asarray(a.values), np.asarray(b.values)
    ok = ~(np.isnan(va) | np.isnan(vb))
    return float(np.sum(va[ok] * vb[ok]) * a.lines.dtheta * a.lines.ds)


def sinogram_norm(a):
    return sqrt(max(sinogram_inner(a, a), 0.0))


# ------------------------------------------------------------------ kernels

def _bilinear_setup(grid, px, py):
    """Corner indices and weights of bilinear interpolation at points."""
    u = (px + grid.extent) / grid.spacing
    v = (py + grid.extent) / grid.spacing
    i0 = np.floor(u).astype(np.int64)
    j0 = np.floor(v).astype(np.int64)
    fu = u - i0
    fv = v - j0
    n = grid.n
    out = []
    for di, dj, w in ((0, 0, (1 - fu) * (1 - fv)), (1, 0, fu * (1 - fv)),
                      (0, 1, (1 - fu) * fv), (1, 1, fu * fv)):
        i, j = i0 + di, j0 + dj
        ok = (i >= 0) & (i < n) & (j >= 0) & (j < n)
        out.append((np.where(ok, i, 0), np.where(ok, j, 0), np.where(ok, w, 0.0)))
    return out


def bilinear(values, grid, px, py):
    """Bilinear interpolation, zero outside the grid square."""
    acc = 0.0
    for i, j, w in _bilinear_setup(grid, px, py):
        acc = acc + w * values[i, j]
    return acc


def _check2d(grid):
    if grid.dim != 2:
        raise UnsupportedDimensionError("the X-ray transform is implemented in 2-D only")


def _forward_rows(values, lines, ks):
    step = 0.5 * lines.grid.spacing
    rows = []
    for k in ks:
        px, py = lines.sample_points(k)
        coords = [(px + lines.grid.extent) / lines.grid.spacing, (py + lines.grid.extent) / lines.grid.spacing]
        # grid-constant keeps interpolating toward the zero extension, as bilinear() does
        samp = ndimage.map_coordinates(values, coords, order=1, mode="grid-constant", prefilter=False)
        rows.append(samp.sum(axis=1) * step)
    return rows


def _chunks(n, size):
    return [range(a, min(a + size, n)) for a in range(0, n, size)]


def xray_forward(f, lines):
    """Line integrals by trapezoid quadrature with step h/2."""
    _check2d(f.grid)
    if f.grid != lines.grid:
        raise ShapeError("field grid does not match line set grid")
    vals = np.real(f.values)
    blocks = pmap(lambda ks: _forward_rows(vals, lines, ks), _chunks(lines.angles.size, 8))
    return Sinogram(lines, np.array([r for b in blocks for r in b]))


def _backproject_rows(vals, lines, ks):
    grid = lines.grid
    x, y = grid.mesh()
    acc = np.zeros(grid.shape)
    for k in ks:
        th = lines.angles[k]
        s = x * np.cos(th) + y * np.sin(th)
        acc += np.interp(s, lines.offsets, vals[k], left=0.0, right=0.0)
    return acc


def backproject(g, dtheta=None):
    """Pixel-driven adjoint: sum_k g(theta_k, x . w_k) dtheta."""
    lines = g.lines
    _check2d(lines.grid)
    dtheta = lines.dtheta if dtheta is None else dtheta
    vals = g.filled()
    parts = pmap(lambda ks: _backproject_rows(vals, lines, ks), _chunks(lines.angles.size, 16))
    acc = np.zeros(lines.grid.shape)
    for p in parts:
        acc += p
    return ScalarField(lines.grid, acc * dtheta)


def normal_scalar(f, lines):
    return backproject(xray_forward(f, lines))


def ramlak_kernel(n_offsets, ds):
    k = np.arange(-(n_offsets - 1), n_offsets)
    h = np.zeros(k.size)
    h[k == 0] = 1.0 / (4.0 * ds * ds)
    odd = (k % 2) != 0
    h[odd] = -1.0 / (np.pi ** 2 * k[odd] ** 2 * ds * ds)
    return h


def ramp_filter(g):
    lines = g.lines
    kern = ramlak_kernel(lines.offsets.size, lines.ds)
    vals = g.filled()
    out = fftconvolve(vals, kern[None, :], mode="same", axes=1) * lines.ds
    return Sinogram(lines, out)


def fbp_reconstruct(g):
    """Ram-Lak filtered back-projection."""
    if g.lines.angles.size < 8:
        raise InsufficientDataError("filtered back-projection needs at least 8 angles")
    if g.lines.full_circle:
        raise InsufficientDataError("fbp expects angles covering [0, pi) once")
    return backproject(ramp_filter(g), dtheta=np.pi / g.lines.angles.size)


def lines_through_region(lines, V):
    """Flag lines having a quadrature sample in a true cell of V."""
    _check2d(lines.grid)
    grid = lines.grid
    flags = np.zeros(lines.shape, dtype=bool)
    inside = V.inside
    for k in range(lines.angles.size):
        px, py = lines.sample_points(k)
        i = np.rint((px + grid.extent) / grid.spacing).astype(np.int64)
        j = np.rint((py + grid.extent) / grid.spacing).astype(np.int64)
        ok = (i >= 0) & (i < grid.n) & (j >= 0) & (j < grid.n)
        hit = np.zeros(i.shape, dtype=bool)
        hit[ok] = inside[i[ok], j[ok]]
        flags[k] = hit.any(axis=1)
    return flags


def xray_matrix(lines):
    """Sparse matrix of xray_forward (rows: lines raveled, cols: grid raveled)."""
    grid = lines.grid
    _check2d(grid)
    step = 0.5 * grid.spacing
    n_off, n_t = lines.offsets.size, lines.t_samples.size
    rows, cols, data = [], [], []
    for k in range(lines.angles.size):
        px, py = lines.sample_points(k)
        row = (k * n_off + np.arange(n_off))[:, None] * np.ones((1, n_t), dtype=np.int64)
        for i, j, w in _bilinear_setup(grid, px, py):
            keep = w != 0
            rows.append(row[keep])
            cols.append((i * grid.n + j)[keep])
            data.append(w[keep] * step)
    A = sparse.coo_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(lines.n_lines, grid.size))
    return A.tocsr()


def fit_constant(a, b, mask=None):
    """Least-squares c minimizing ||a - c b|| over the mask."""
    a, b = np.asarray(a), np.asarray(b)
    if mask is not None:
        a, b = a[mask], b[mask]
    return float(np.sum(a * b) / np.sum(b * b))
