"""Radial sound-speed profiles c(r) on a disk of radius R."""
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from ..errors import ConfigurationError, DomainError


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """c(r) = sum_k coeffs[k] r^k on [0, R], degree <= 6, positive."""

    coeffs: tuple
    R: float = 1.0

    def __post_init__(self):
        co = tuple(float(a) for a in np.atleast_1d(self.coeffs))
        while len(co) > 1 and co[-1] == 0.0:
            co = co[:-1]
        if len(co) - 1 > 6:
            raise ConfigurationError("profile degree must be <= 6")
        if not self.R > 0:
            raise ConfigurationError("R must be positive")
        object.__setattr__(self, "coeffs", co)
        r = np.linspace(0.0, self.R, 1024)
        if not np.all(self(r) > 0):
            raise DomainError("c(r) must be positive on [0, R]")
        dco = tuple(k * a for k, a in enumerate(co))[1:] or (0.0,)
        object.__setattr__(self, "_dcoeffs", dco)

    @classmethod
    def constant(cls, value=1.0, R=1.0):
        return cls((value,), R)

    @classmethod
    def fit(cls, func, R=1.0, degree=6):
        """Least-squares polynomial fit of ``func`` at Chebyshev points of [0, R]."""
        k = np.arange(64)
        r = 0.5 * R * (1 - np.cos(np.pi * (k + 0.5) / 64))
        P = Polynomial.fit(r, func(r), degree).convert()
        return cls(tuple(P.coef), R)

    def __call__(self, r):
        return _horner(self.coeffs, r)

    def derivative(self, r):
        return _horner(self._dcoeffs, r)

    def scaled(self, k):
        return RadialProfile(tuple(k * a for a in self.coeffs), self.R)

    def on_grid(self, grid):
        return self(grid.radius())

    def min_on_disk(self):
        return float(self(np.linspace(0.0, self.R, 1024)).min())

    def to_json(self):
        return {"coeffs": list(self.coeffs), "R": self.R}


def _horner(co, r):
    out = 0.0 * np.asarray(r, dtype=float) if not np.isscalar(r) else 0.0
    for a in reversed(co):
        out = out * r + a
    return out


def herglotz_check(c, n=1024):
    """(holds, margin) for d/dr (r / c(r)) > 0 on [0, R]."""
    r = np.linspace(0.0, c.R, n)
    cv = c(r)
    d = (cv - r * c.derivative(r)) / cv ** 2
    margin = float(d.min())
    return margin > 0, margin
