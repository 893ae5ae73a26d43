"""Fractional Laplacians, Riesz potentials and unique-continuation probes.

``(-Lap)^s`` is applied as the Fourier multiplier |xi|^{2s} on a
zero-padded torus (see :class:`tomolab.spectral.SpectralPlan`).  Riesz
potentials I_alpha f = f * |x|^{-alpha} use a direct padded convolution
whose singular cell is the exact cell average of the kernel.

Conventions:  I_alpha = riesz_constant(dim, alpha) (-Lap)^{-(dim-alpha)/2};
in 2-D, I_1 = 2 pi (-Lap)^{-1/2}.
"""
from dataclasses import dataclass
from functools import lru_cache
from math import factorial, gamma, pi

import numpy as np
from scipy import integrate
from scipy.signal import fftconvolve

from .errors import (DegenerateInputError, DomainError, PlacementError, ShapeError,
                     SizeError)
from .fields import PolyOperator, ScalarField, apply_poly_operator, multi_indices
from .parallel import pmap
from .spectral import SpectralPlan, apply_multiplier

SYMBOLS = ("continuous", "lattice")


@dataclass(frozen=True)
class FracExponent:
    s: float
    dim: int = 2

    def __post_init__(self):
        s = float(self.s)
        if not (-self.dim / 2 < s <= 4):
            raise DomainError(f"s = {s} outside (-{self.dim}/2, 4]")
        object.__setattr__(self, "s", s)

    @property
    def is_integer(self):
        return float(self.s).is_integer()


def _exponent(s, dim):
    return s if isinstance(s, FracExponent) else FracExponent(float(s), dim)


def _symbol_power(plan, s, symbol):
    if symbol not in SYMBOLS:
        raise DomainError(f"symbol must be one of {SYMBOLS}")
    xi2 = plan.xi_squared() if symbol == "continuous" else plan.lattice_xi_squared()
    with np.errstate(divide="ignore"):
        mult = np.where(xi2 > 0, xi2 ** s, 0.0)
    if s == 0:
        mult = np.ones_like(xi2)
    return mult


def fractional_laplacian_torus(values, s, plan, symbol="continuous"):
    """Multiplier |xi|^{2s} on a full torus array (no padding, no crop)."""
    values = np.asarray(values, dtype=float)
    if values.shape != plan.shape:
        raise ShapeError("torus array does not match the plan size")
    return apply_multiplier(values, _symbol_power(plan, float(s), symbol), plan.shape)


def fractional_laplacian(f, s, plan=None, symbol="continuous"):
    """(-Lap)^s f by zero-padded FFT.

    For s < 0 the zero frequency is handled by ``plan.zero_mode_rule``:
    ``subtract-mean`` removes the grid mean first, ``zero`` drops the
    xi = 0 mode and flags a nonzero mean in ``result.warnings``.
    """
    plan = SpectralPlan(f.grid) if plan is None else plan
    s = _exponent(s, f.grid.dim).s
    vals = np.real(f.values).astype(float)
    warnings = ()
    if s < 0:
        mean = float(vals.mean())
        if plan.zero_mode_rule == "subtract-mean":
            vals = vals - mean
        elif abs(mean) > 1e-12 * max(float(np.abs(vals).max()), 1e-300):
            warnings = ("nonzero-mean-dropped",)
    out = fractional_laplacian_torus(plan.pad(vals), s, plan, symbol)
    return ScalarField(f.grid, plan.crop(out), warnings)


def riesz_constant(dim, alpha):
    """c with f * |x|^{-alpha} = c (-Lap)^{-(dim-alpha)/2} f."""
    return pi ** (dim / 2) * 2 ** (dim - alpha) * gamma((dim - alpha) / 2) / gamma(alpha / 2)


@lru_cache(maxsize=64)
def singular_cell_average(dim, alpha, h):
    """Mean of |x|^{-alpha} over the cube [-h/2, h/2]^dim.

    The cube splits into 2 dim pyramids with apex at 0; radial
    integration is explicit and the face integral is done by quadrature.
    """
    if alpha >= dim:
        raise DomainError("kernel |x|^-alpha is not locally integrable for alpha >= dim")
    if alpha <= 0:
        return 0.0 if alpha < 0 else 1.0
    if dim == 2:
        face, _ = integrate.quad(lambda a: (1 + a * a) ** (-alpha / 2), -1, 1, epsabs=1e-14, epsrel=1e-13)
    else:
        face, _ = integrate.dblquad(lambda b, a: (1 + a * a + b * b) ** (-alpha / 2), -1, 1, -1, 1,
                                    epsabs=1e-13, epsrel=1e-12)
    total = 2 * dim * face / (dim - alpha)
    a = h / 2
    return a ** (dim - alpha) * total / h ** dim


@lru_cache(maxsize=256)
def _offcentre_cell_average(i, j, alpha, h):
    """Mean of |x|^{-alpha} over the 2-D cell centred at (i h, j h)."""
    val, _ = integrate.dblquad(lambda y, x: (x * x + y * y) ** (-alpha / 2),
                               (i - 0.5) * h, (i + 0.5) * h, (j - 0.5) * h, (j + 0.5) * h,
                               epsabs=0.0, epsrel=1e-12)
    return val / (h * h)


def riesz_kernel(grid, alpha, near=2):
    """|x|^{-alpha} on the (2n-1)^dim offset lattice, as cell averages.

    The singular cell and (in 2-D) the cells within ``near`` of it are
    exact averages; the rest use the point value plus the curvature term
    h^2/24 Lap|x|^{-alpha}, which is the leading cell-average correction.
    """
    dim, h, alpha = grid.dim, grid.spacing, float(alpha)
    k = h * np.arange(-(grid.n - 1), grid.n)
    mesh = np.meshgrid(*([k] * dim), indexing="ij")
    r = np.sqrt(sum(x * x for x in mesh))
    centre = (grid.n - 1,) * dim
    r[centre] = 1.0
    kern = r ** -alpha
    if alpha > 0:
        kern = kern + h * h / 24.0 * alpha * (alpha + 2 - dim) * r ** (-alpha - 2)
    kern[centre] = singular_cell_average(dim, alpha, h)
    if dim == 2 and alpha > 0:
        c = grid.n - 1
        for i in range(-near, near + 1):
            for j in range(-near, near + 1):
                if (i, j) != (0, 0) and abs(i) <= c and abs(j) <= c:
                    a, b = sorted((abs(i), abs(j)))
                    kern[c + i, c + j] = _offcentre_cell_average(a, b, alpha, h)
    return kern


def riesz_potential(f, alpha, plan=None):
    """I_alpha f = f * |x|^{-alpha}, evaluated on the grid of f.

    ``plan`` is accepted for interface symmetry; the convolution is
    linear (zero-padded), not periodic.
    """
    dim = f.grid.dim
    if alpha >= dim:
        raise DomainError(f"alpha = {alpha} >= dim gives a divergent kernel")
    kern = riesz_kernel(f.grid, alpha)
    out = fftconvolve(np.real(f.values), kern, mode="same") * f.grid.spacing ** dim
    return ScalarField(f.grid, out)


def normal_dplane(f, d, plan=None):
    """(-Lap)^{-d/2} f, the d-plane normal operator up to its constant."""
    if not (0 < d < f.grid.dim):
        raise DomainError(f"need 0 < d < dim, got d = {d}")
    return fractional_laplacian(f, -d / 2.0, plan)


def dplane_constant(dim, d):
    """Constant c in N_d = c (-Lap)^{-d/2} when the d-plane transform is
    back-projected over the full sphere of directions (d = 1: both
    orientations of each line).  Only d = 1 is cross-checked here."""
    if d != 1:
        raise DomainError("only d = 1 has an implemented geometric transform")
    # N_1 = 2 I_{dim-1}
    return 2.0 * riesz_constant(dim, dim - 1)


# ------------------------------------------------------------ local probes

@lru_cache(maxsize=32)
def central_weights(order, half_width):
    """Central difference weights on offsets -m..m for d^order/dx^order."""
    m = half_width
    z = np.arange(-m, m + 1, dtype=float)
    p = np.arange(2 * m + 1)
    V = z[None, :] ** p[:, None] / np.array([factorial(int(k)) for k in p])[:, None]
    rhs = np.zeros(2 * m + 1)
    rhs[order] = 1.0
    return np.linalg.solve(V, rhs)


def vanishing_order_probe(f, x0, k_max):
    """Max |d^alpha f(x0)| over |alpha| = k for k = 0..k_max.

    Mixed partials use tensor products of central stencils of half-width
    ``k_max``, so each entry is exact for polynomials of degree 2 k_max.
    """
    if not (0 <= k_max <= 4):
        raise DomainError("k_max must lie in 0..4")
    grid = f.grid
    x0 = tuple(int(i) for i in x0)
    m = max(k_max, 1)
    if any(i < m or i > grid.n - 1 - m for i in x0):
        raise PlacementError(f"x0 = {x0} is closer than {m} cells to the boundary")
    patch = np.real(f.values)[tuple(slice(i - m, i + m + 1) for i in x0)]
    h = grid.spacing
    out = []
    for k in range(k_max + 1):
        best = 0.0
        for alpha in multi_indices(grid.dim, k):
            val = patch
            for ax in range(grid.dim):
                w = central_weights(alpha[ax], m)
                val = np.tensordot(w, val, axes=([0], [0]))
            best = max(best, abs(float(val)) / h ** k)
        out.append(best)
    return out


def poincare_ratio(f, s, t, plan=None):
    """||(-Lap)^{t/2} f|| / ||(-Lap)^{s/2} f|| on the padded torus (Parseval)."""
    if not (s >= t >= 0):
        raise DomainError("need s >= t >= 0")
    plan = SpectralPlan(f.grid) if plan is None else plan
    F = np.fft.rfftn(plan.pad(np.real(f.values)))
    w = np.full(F.shape, 2.0)
    w[..., 0] = 1.0
    if plan.size % 2 == 0:
        w[..., -1] = 1.0
    xi2 = plan.xi_squared()
    p2 = np.abs(F) ** 2 * w

    def energy(e):
        if e == 0:
            return float(p2.sum())
        return float((p2 * xi2 ** e).sum())

    den = energy(s)
    if not den > 0:
        raise DegenerateInputError("zero denominator in the Poincare ratio")
    return float(np.sqrt(energy(t) / den))


# ------------------------------------------------------------ rank tests

def _operator_columns(grid, s, support_idx, plan, symbol):
    """Columns of (-Lap)^s restricted to unknowns on ``support_idx``."""
    dim = grid.dim
    if s < 0:
        alpha = dim + 2 * s
        scale = 1.0 / riesz_constant(dim, alpha)

        def col(j):
            e = np.zeros(grid.size)
            e[j] = 1.0
            return riesz_potential(ScalarField(grid, e.reshape(grid.shape)), alpha).values.ravel() * scale
    else:
        def col(j):
            e = np.zeros(grid.size)
            e[j] = 1.0
            return fractional_laplacian(ScalarField(grid, e.reshape(grid.shape)), s, plan, symbol).values.ravel()
    return np.column_stack(pmap(col, list(support_idx)))


def _poly_columns(grid, P, support_idx):
    cols = []
    for j in support_idx:
        e = np.zeros(grid.size)
        e[j] = 1.0
        cols.append(apply_poly_operator(ScalarField(grid, e.reshape(grid.shape)), P).values.ravel())
    return np.column_stack(cols)


def stack_complex(rows):
    """Real representation of complex equations: real rows over imaginary rows."""
    rows = np.asarray(rows)
    if not np.iscomplexobj(rows):
        return rows
    return np.vstack([rows.real, rows.imag])


def normalized(block, scale=None):
    """block / ||block||_2, or block / scale when the scale of the
    unrestricted operator is given (keeps roundoff-level blocks small)."""
    nrm = (np.linalg.norm(block, 2) if block.size else 0.0) if scale is None else scale
    return block / nrm if nrm > 0 else block


def singular_summary(M, scale=None):
    """Extreme singular values and numerical rank; the rank tolerance is
    1e3 eps times ``scale`` (default sigma_max)."""
    sv = np.linalg.svd(M, compute_uv=False)
    n_unknowns = M.shape[1]
    smax = float(sv[0]) if sv.size else 0.0
    smin = float(sv[-1]) if M.shape[0] >= n_unknowns else 0.0
    tol = 1e3 * np.finfo(float).eps * (smax if scale is None else scale)
    rank = int(np.sum(sv > tol))
    return {"sigma_min": smin, "sigma_max": smax, "rank": rank,
            "rank_deficiency": n_unknowns - rank, "tolerance": float(tol)}


def ucp_rank_experiment(grid, s, V, constraint, plan=None, support=None, symbol=None):
    """Singular values of f -> [ ((-Lap)^s f)|_V ; (P(D) f)|_V ].

    Unknowns are the grid values on ``support`` (default: whole grid).
    Integer s uses the 5-point lattice symbol, which is a local stencil;
    non-integer s uses |xi|^{2s}; s < 0 uses the Riesz convolution with
    alpha = dim + 2 s.  Each block is divided by the spectral norm of the
    same operator before restriction to V.
    """
    if grid.size > 24 ** 2:
        raise SizeError("dense rank experiments are limited to 24^2 unknowns")
    if V.is_empty():
        raise DomainError("V must be nonempty")
    if not isinstance(constraint, PolyOperator):
        raise DomainError("constraint must be a PolyOperator")
    ex = _exponent(s, grid.dim)
    plan = SpectralPlan(grid) if plan is None else plan
    if symbol is None:
        symbol = "lattice" if ex.is_integer else "continuous"
    support_mask = np.ones(grid.shape, bool) if support is None else support.inside
    idx = np.flatnonzero(support_mask.ravel())
    rows_v = np.flatnonzero(V.inside.ravel())
    A_all = _operator_columns(grid, ex.s, idx, plan, symbol)
    B_all = stack_complex(_poly_columns(grid, constraint, idx))
    # scale by the unrestricted operators: a block that vanishes on V up to
    # roundoff must not be blown up to unit norm
    A = normalized(A_all[rows_v], np.linalg.norm(A_all, 2))
    nB = np.linalg.norm(B_all, 2)
    rows_b = np.concatenate([rows_v, rows_v + grid.size]) if B_all.shape[0] > grid.size else rows_v
    B = B_all[rows_b]
    B = normalized(B[np.any(B != 0, axis=1)], nB)
    M = np.vstack([A, B])
    out = singular_summary(M, scale=1.0)
    out.update(n_unknowns=int(idx.size), n_equations=int(M.shape[0]), s=ex.s, symbol=symbol,
               mask_cells=V.count, support_cells=int(idx.size))
    return out
