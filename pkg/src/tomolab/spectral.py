"""Padded-torus Fourier machinery shared by the spectral operators.

Fields are zero-padded into the corner of a periodic box of ``M`` nodes
per axis with the same spacing; multipliers act on the discrete angular
frequencies of that box.  Odd-order derivative symbols drop the Nyquist
row so that discrete grad, div and curl are real and commute exactly.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, ShapeError

ZERO_MODE_RULES = ("zero", "subtract-mean")


@dataclass(frozen=True)
class SpectralPlan:
    grid: object
    pad_factor: int = 4
    zero_mode_rule: str = "subtract-mean"

    def __post_init__(self):
        if int(self.pad_factor) != self.pad_factor or self.pad_factor < 2:
            raise ConfigurationError("pad_factor must be an integer >= 2")
        if self.zero_mode_rule not in ZERO_MODE_RULES:
            raise ConfigurationError(f"zero_mode_rule must be one of {ZERO_MODE_RULES}")

    @property
    def size(self):
        m = self.pad_factor * self.grid.n
        return m + (m % 2)

    @property
    def shape(self):
        return (self.size,) * self.grid.dim

    def pad(self, values):
        values = np.asarray(values)
        if values.shape != self.grid.shape:
            raise ShapeError("array does not match the plan grid")
        out = np.zeros(self.shape, dtype=values.dtype)
        out[tuple(slice(0, self.grid.n) for _ in range(self.grid.dim))] = values
        return out

    def crop(self, values):
        return np.asarray(values)[tuple(slice(0, self.grid.n) for _ in range(self.grid.dim))]

    @cached_property
    def _axes(self):
        return wavenumbers(self.size, self.grid.spacing, self.grid.dim)

    def wavevector(self, nyquist=True):
        """Broadcastable per-axis angular frequencies in rfftn layout."""
        full, half, full_odd, half_odd = self._axes
        return _broadcast(full if nyquist else full_odd, half if nyquist else half_odd, self.grid.dim)

    def xi_squared(self):
        return sum(k * k for k in self.wavevector())

    def lattice_xi_squared(self):
        h = self.grid.spacing
        return sum((4.0 / h ** 2) * np.sin(0.5 * k * h) ** 2 for k in self.wavevector())

    def to_dict(self):
        return {"pad_factor": self.pad_factor, "zero_mode_rule": self.zero_mode_rule, "size": self.size}


def wavenumbers(m, h, dim):
    full = 2.0 * np.pi * np.fft.fftfreq(m, d=h)
    half = 2.0 * np.pi * np.fft.rfftfreq(m, d=h)
    full_odd, half_odd = full.copy(), half.copy()
    if m % 2 == 0:
        full_odd[m // 2] = 0.0
        half_odd[-1] = 0.0
    return full, half, full_odd, half_odd


def _broadcast(full, half, dim):
    out = []
    for ax in range(dim):
        shape = [1] * dim
        shape[ax] = -1
        out.append((half if ax == dim - 1 else full).reshape(shape))
    return out


def apply_multiplier(values, multiplier, shape):
    """Real torus array -> irfftn(multiplier * rfftn(values))."""
    return np.fft.irfftn(multiplier * np.fft.rfftn(values), s=shape, axes=tuple(range(len(shape))))


def torus_derivative(values, axis, h):
    """Spectral d/dx_axis of a periodic real array (Nyquist mode dropped)."""
    values = np.asarray(values, dtype=float)
    dim = values.ndim
    m = values.shape[0]
    if any(s != m for s in values.shape):
        raise ShapeError("torus arrays must be hypercubic")
    _, _, full_odd, half_odd = wavenumbers(m, h, dim)
    k = _broadcast(full_odd, half_odd, dim)[axis]
    return apply_multiplier(values, 1j * k, values.shape)


# the unpadded grid viewed as its own torus
periodic_derivative = torus_derivative


def spectral_divergence(components, h):
    return sum(torus_derivative(c, ax, h) for ax, c in enumerate(components))


def spectral_curl2d(components, h):
    return torus_derivative(components[1], 0, h) - torus_derivative(components[0], 1, h)
