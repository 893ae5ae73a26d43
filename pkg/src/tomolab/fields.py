"""Grid geometry, field containers, masks, stencils and phantoms.

Every field lives on a uniform grid covering [-L, L]^dim with
``n`` nodes per axis.  Arrays use ``indexing='ij'``: ``values[i, j]`` is
the sample at ``(x_1[i], x_2[j])``.
"""
from dataclasses import dataclass, field
from itertools import product
from math import comb

import numpy as np
from scipy import ndimage

from .errors import ConfigurationError, ShapeError, UnsupportedOrderError

PHANTOM_KINDS = ("gaussian-bumps", "ellipse-sum", "divergence-free-swirl")


@dataclass(frozen=True)
class GridSpec:
    dim: int
    n: int
    extent: float = 1.0

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ConfigurationError(f"dim must be 2 or 3, got {self.dim}")
        if self.n < 8:
            raise ConfigurationError(f"n_per_axis must be >= 8, got {self.n}")
        if not self.extent > 0:
            raise ConfigurationError("extent must be positive")

    @property
    def spacing(self):
        return 2.0 * self.extent / (self.n - 1)

    h = spacing

    @property
    def shape(self):
        return (self.n,) * self.dim

    @property
    def size(self):
        return self.n ** self.dim

    def axis(self):
        return np.linspace(-self.extent, self.extent, self.n)

    def mesh(self):
        return np.meshgrid(*([self.axis()] * self.dim), indexing="ij")

    def radius(self):
        return np.sqrt(sum(x * x for x in self.mesh()))

    def to_index(self, points):
        """Fractional grid indices of physical points (last axis = coordinate)."""
        return (np.asarray(points, dtype=float) + self.extent) / self.spacing

    def nearest_index(self, point):
        idx = np.rint(self.to_index(point)).astype(int)
        return tuple(int(i) for i in idx)

    def to_dict(self):
        return {"dim": self.dim, "n_per_axis": self.n, "extent": self.extent}


def _check_finite(arr, what):
    if not np.all(np.isfinite(arr)):
        raise ShapeError(f"{what} contains non-finite entries")


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: GridSpec
    values: np.ndarray
    warnings: tuple = ()

    def __post_init__(self):
        vals = np.asarray(self.values)
        if not np.iscomplexobj(vals):
            vals = vals.astype(float, copy=False)
        if vals.shape != self.grid.shape:
            raise ShapeError(f"values shape {vals.shape} does not match grid {self.grid.shape}")
        _check_finite(vals, "ScalarField")
        object.__setattr__(self, "values", vals)

    @property
    def is_complex(self):
        return np.iscomplexobj(self.values)

    def max_abs(self):
        return float(np.max(np.abs(self.values)))

    def with_values(self, values, warnings=()):
        return ScalarField(self.grid, values, warnings)

    def __add__(self, other):
        _same_grid(self, other)
        return ScalarField(self.grid, self.values + other.values)

    def __sub__(self, other):
        _same_grid(self, other)
        return ScalarField(self.grid, self.values - other.values)

    def __mul__(self, a):
        return ScalarField(self.grid, a * self.values)

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self.values)


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: GridSpec
    components: tuple

    def __post_init__(self):
        comps = tuple(np.asarray(c, dtype=float) for c in self.components)
        if len(comps) != self.grid.dim:
            raise ShapeError(f"expected {self.grid.dim} components, got {len(comps)}")
        for c in comps:
            if c.shape != self.grid.shape:
                raise ShapeError("component shape does not match grid")
            _check_finite(c, "VectorField")
        object.__setattr__(self, "components", comps)

    def stack(self):
        return np.stack(self.components)

    def max_abs(self):
        return float(np.max(np.sqrt(sum(c * c for c in self.components))))

    def __add__(self, other):
        _same_grid(self, other)
        return VectorField(self.grid, tuple(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other):
        _same_grid(self, other)
        return VectorField(self.grid, tuple(a - b for a, b in zip(self.components, other.components)))

    def __mul__(self, a):
        return VectorField(self.grid, tuple(a * c for c in self.components))

    __rmul__ = __mul__


def _same_grid(a, b):
    if a.grid != b.grid:
        raise ShapeError(f"grid mismatch: {a.grid} vs {b.grid}")


@dataclass(frozen=True, eq=False)
class RegionMask:
    grid: GridSpec
    inside: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.inside, dtype=bool)
        if m.shape != self.grid.shape:
            raise ShapeError("mask shape does not match grid")
        object.__setattr__(self, "inside", m)

    @property
    def count(self):
        return int(self.inside.sum())

    def is_empty(self):
        return self.count == 0

    def is_connected(self):
        _, n = ndimage.label(self.inside)
        return n == 1

    def complement(self):
        return RegionMask(self.grid, ~self.inside)

    def __or__(self, other):
        return RegionMask(self.grid, self.inside | other.inside)

    def __and__(self, other):
        return RegionMask(self.grid, self.inside & other.inside)

    def __sub__(self, other):
        return RegionMask(self.grid, self.inside & ~other.inside)

    def dilate(self, cells=1):
        return RegionMask(self.grid, ndimage.binary_dilation(self.inside, iterations=cells))

    def issubset(self, other):
        return not np.any(self.inside & ~other.inside)

    def digest(self):
        import hashlib
        return hashlib.sha256(np.packbits(self.inside).tobytes()).hexdigest()[:16]

    @classmethod
    def full(cls, grid):
        return cls(grid, np.ones(grid.shape, dtype=bool))

    @classmethod
    def empty(cls, grid):
        return cls(grid, np.zeros(grid.shape, dtype=bool))

    @classmethod
    def disk(cls, grid, radius, center=None):
        center = np.zeros(grid.dim) if center is None else np.asarray(center, dtype=float)
        r2 = sum((x - c) ** 2 for x, c in zip(grid.mesh(), center))
        return cls(grid, r2 < radius * radius)

    @classmethod
    def box(cls, grid, lo, hi):
        """Cells with index lo[k] <= i_k < hi[k] on every axis."""
        m = np.zeros(grid.shape, dtype=bool)
        m[tuple(slice(a, b) for a, b in zip(lo, hi))] = True
        return cls(grid, m)


@dataclass(frozen=True)
class PolyOperator:
    """Constant-coefficient P(D) = sum_a c_a D^a, D_j = -i d/dx_j, |a| <= 2."""

    coefficients: dict = field(default_factory=dict)

    def __post_init__(self):
        coeffs = {tuple(int(a) for a in k): complex(v) for k, v in dict(self.coefficients).items()}
        coeffs = {k: v for k, v in coeffs.items() if v != 0}
        if not coeffs:
            raise ConfigurationError("the zero polynomial is not an admissible constraint")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def order(self):
        return max(sum(a) for a in self.coefficients)

    @property
    def dim(self):
        return len(next(iter(self.coefficients)))

    @classmethod
    def identity(cls, dim=2):
        return cls({(0,) * dim: 1.0})

    @classmethod
    def first_order(cls, axis=0, dim=2):
        a = [0] * dim
        a[axis] = 1
        return cls({tuple(a): 1.0})

    @classmethod
    def laplacian(cls, dim=2):
        """The symbol |xi|^2, i.e. P(D) = -Laplacian."""
        coeffs = {}
        for j in range(dim):
            a = [0] * dim
            a[j] = 2
            coeffs[tuple(a)] = 1.0
        return cls(coeffs)

    def to_json(self):
        return {",".join(map(str, k)): [v.real, v.imag] for k, v in sorted(self.coefficients.items())}

    @classmethod
    def from_json(cls, data):
        return cls({tuple(int(x) for x in k.split(",")): complex(v[0], v[1]) for k, v in data.items()})


# ---------------------------------------------------------------- stencils

def diff1(values, axis, h):
    """Central first derivative, one-sided second order at the edges."""
    return np.gradient(values, h, axis=axis, edge_order=2)


def diff2(values, axis, h):
    v = np.moveaxis(np.asarray(values), axis, 0)
    out = np.empty_like(v)
    out[1:-1] = v[2:] - 2.0 * v[1:-1] + v[:-2]
    out[0] = 2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]
    out[-1] = 2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]
    return np.moveaxis(out, 0, axis) / (h * h)


def partial(values, alpha, h):
    """d^alpha of grid samples for |alpha| <= 2."""
    alpha = tuple(alpha)
    order = sum(alpha)
    if order > 2:
        raise UnsupportedOrderError(f"derivative order {order} > 2 is not supported")
    out = np.asarray(values)
    for ax, k in enumerate(alpha):
        if k == 2:
            out = diff2(out, ax, h)
        elif k == 1:
            out = diff1(out, ax, h)
    return out


def apply_poly_operator(f, P):
    """Apply P(D) to ``f`` with second-order finite differences."""
    if P.dim != f.grid.dim:
        raise ShapeError("polynomial dimension does not match grid")
    if P.order > 2:
        raise UnsupportedOrderError(f"order {P.order} > 2 is not supported")
    h = f.grid.spacing
    out = np.zeros(f.grid.shape, dtype=complex)
    for alpha, c in P.coefficients.items():
        out += c * (-1j) ** sum(alpha) * partial(f.values, alpha, h)
    if not np.any(out.imag) and not f.is_complex:
        out = out.real.copy()
    return ScalarField(f.grid, out)


def gradient(f):
    """Central-difference gradient (same stencil as :func:`curl2d`)."""
    h = f.grid.spacing
    return VectorField(f.grid, tuple(diff1(f.values, ax, h) for ax in range(f.grid.dim)))


def rot_gradient(psi):
    """(d2 psi, -d1 psi): divergence-free field from a stream function."""
    if psi.grid.dim != 2:
        raise ShapeError("rot_gradient is two-dimensional")
    h = psi.grid.spacing
    return VectorField(psi.grid, (diff1(psi.values, 1, h), -diff1(psi.values, 0, h)))


# ------------------------------------------------------------- quadrature

def trapezoid_weights(grid):
    w1 = np.full(grid.n, grid.spacing)
    w1[0] = w1[-1] = 0.5 * grid.spacing
    w = w1
    for _ in range(grid.dim - 1):
        w = np.multiply.outer(w, w1)
    return w


def inner(f, g):
    _same_grid(f, g)
    return float(np.sum(trapezoid_weights(f.grid) * np.real(f.values * np.conj(g.values))))


def l2_norm(f):
    w = trapezoid_weights(f.grid)
    return float(np.sqrt(np.sum(w * np.abs(f.values) ** 2)))


def vector_inner(u, v):
    _same_grid(u, v)
    w = trapezoid_weights(u.grid)
    return float(sum(np.sum(w * a * b) for a, b in zip(u.components, v.components)))


def vector_norm(u):
    return float(np.sqrt(vector_inner(u, u)))


# ---------------------------------------------------------------- phantoms

def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def radial_cutoff(r, r_flat, r_zero):
    return 1.0 - smooth_step((r - r_flat) / (r_zero - r_flat))


def _gaussian_sum(grid, rng, n_range, center_radius, sigma_range):
    L = grid.extent
    k = int(rng.integers(n_range[0], n_range[1] + 1))
    X = grid.mesh()
    out = np.zeros(grid.shape)
    for _ in range(k):
        direction = rng.normal(size=grid.dim)
        direction /= np.linalg.norm(direction)
        c = direction * center_radius * L * rng.uniform() ** (1.0 / grid.dim)
        sigma = rng.uniform(*sigma_range) * L
        amp = rng.uniform(0.5, 1.0) * rng.choice([-1.0, 1.0])
        r2 = sum((x - ci) ** 2 for x, ci in zip(X, c))
        out += amp * np.exp(-r2 / (2.0 * sigma * sigma))
    return out


def _ellipse_sum(grid, rng):
    if grid.dim != 2:
        raise ConfigurationError("ellipse-sum phantoms are two-dimensional")
    L = grid.extent
    x, y = grid.mesh()
    out = np.zeros(grid.shape)
    edge = 0.015 * L
    for j in range(int(rng.integers(4, 7))):
        if j == 0:
            a, b, cx, cy, amp = 0.7 * L, 0.55 * L, 0.0, 0.0, 1.0
        else:
            a, b = rng.uniform(0.08, 0.3, size=2) * L
            rho = rng.uniform(0.0, 0.35) * L
            phi = rng.uniform(0, 2 * np.pi)
            cx, cy = rho * np.cos(phi), rho * np.sin(phi)
            amp = rng.uniform(-0.5, 0.5)
        ang = rng.uniform(0, np.pi)
        u = (x - cx) * np.cos(ang) + (y - cy) * np.sin(ang)
        v = -(x - cx) * np.sin(ang) + (y - cy) * np.cos(ang)
        rho_n = np.sqrt((u / a) ** 2 + (v / b) ** 2)
        # approximate signed distance to the boundary, in length units
        dist = (rho_n - 1.0) * min(a, b)
        out += amp * 0.5 * (1.0 - np.tanh(dist / edge))
    return out


def make_phantom(grid, kind, seed=0):
    """Deterministic test field supported inside radius 0.9 L.

    ``divergence-free-swirl`` returns a :class:`VectorField` built as the
    spectral rotated gradient of a smooth stream function, so its
    spectral divergence vanishes to rounding.
    """
    if kind not in PHANTOM_KINDS:
        raise ConfigurationError(f"unknown phantom kind {kind!r}; expected one of {PHANTOM_KINDS}")
    rng = np.random.default_rng(seed)
    L = grid.extent
    r = grid.radius()
    support = r < 0.9 * L
    if kind == "gaussian-bumps":
        vals = _gaussian_sum(grid, rng, (3, 5), 0.3, (0.08, 0.14))
        vals *= radial_cutoff(r, 0.6 * L, 0.9 * L)
        return ScalarField(grid, np.where(support, vals, 0.0))
    if kind == "ellipse-sum":
        vals = _ellipse_sum(grid, rng) * radial_cutoff(r, 0.8 * L, 0.9 * L)
        return ScalarField(grid, np.where(support, vals, 0.0))
    if grid.dim != 2:
        raise ConfigurationError("divergence-free-swirl is two-dimensional")
    psi = _gaussian_sum(grid, rng, (2, 3), 0.1, (0.08, 0.1)) * radial_cutoff(r, 0.8 * L, 0.9 * L)
    psi = np.where(support, psi, 0.0)
    from .spectral import periodic_derivative
    h1 = periodic_derivative(psi, 1, grid.spacing)
    h2 = -periodic_derivative(psi, 0, grid.spacing)
    return VectorField(grid, (np.where(support, h1, 0.0), np.where(support, h2, 0.0)))


def smooth_potential(grid, seed=0):
    """Wide smooth bump (widths 0.2-0.3 L) used for gauge experiments.

    Line integrals of its gradient are resolved far better than those of
    the narrower ``gaussian-bumps`` family at the same grid size.
    """
    rng = np.random.default_rng(seed)
    r = grid.radius()
    vals = _gaussian_sum(grid, rng, (1, 2), 0.2, (0.2, 0.3)) * radial_cutoff(r, 0.6 * grid.extent, 0.9 * grid.extent)
    return ScalarField(grid, np.where(r < 0.9 * grid.extent, vals, 0.0))


def spectral_gradient(f):
    """Gradient by FFT on the grid viewed as a torus (compact support)."""
    from .spectral import periodic_derivative
    return VectorField(f.grid, tuple(periodic_derivative(np.real(f.values), ax, f.grid.spacing)
                                     for ax in range(f.grid.dim)))


def multi_indices(dim, order):
    """All multi-indices of total degree ``order`` in ``dim`` variables."""
    return [a for a in product(range(order + 1), repeat=dim) if sum(a) == order]


def n_multi_indices(dim, order):
    return comb(order + dim - 1, dim - 1)
