"""Herglotz-Wiechert recovery of a radial sound speed from boundary
travel times T(Delta), Delta the angular separation of the endpoints."""
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from ..errors import InsufficientDataError, InvalidDataError


@dataclass(frozen=True, eq=False)
class HerglotzResult:
    r: np.ndarray
    c: np.ndarray
    p: np.ndarray          # ray parameters of the sampled turning points
    delta: np.ndarray      # separations of the corresponding rays

    def interp(self, r):
        o = np.argsort(self.r)
        return np.interp(r, self.r[o], self.c[o])


def ray_parameter_spline(delta, T):
    """Spline of T on the odd extension to [-pi, pi], clamped dT/dDelta(pi) = 0.

    The antipodal ray is radial, so its ray parameter vanishes.
    """
    delta = np.asarray(delta, float)
    T = np.asarray(T, float)
    o = np.argsort(delta)
    delta, T = delta[o], T[o]
    if delta.size < 4:
        raise InsufficientDataError("need at least 4 travel-time samples")
    if delta[0] <= 0 or delta[-1] > np.pi + 1e-12:
        raise InvalidDataError("separations must lie in (0, pi]")
    if abs(delta[-1] - np.pi) > 1e-12:
        raise InsufficientDataError("the antipodal travel time (Delta = pi) is required")
    x = np.concatenate([-delta[::-1], [0.0], delta])
    y = np.concatenate([-T[::-1], [0.0], T])
    return CubicSpline(x, y, bc_type=((1, 0.0), (1, 0.0)))


def herglotz_invert(delta, T, R=1.0, n_out=64, monotone_tol=1e-9):
    """Sampled c(r) from T(Delta).

    p(Delta) = dT/dDelta must decrease from R / c(R) to 0; for each
    sampled Delta_1 with p_1 = p(Delta_1) the turning radius is
        r_1 = R exp(-(1/pi) int_0^{Delta_1} arccosh(p(Delta) / p_1) dDelta)
    and c(r_1) = r_1 / p_1.
    """
    S = ray_parameter_spline(delta, T)
    dS = S.derivative()
    chk = np.linspace(0.0, np.pi, 2049)
    pv = dS(chk)
    if np.any(np.diff(pv) > monotone_tol * max(pv[0], 1e-300)) or pv[0] <= 0:
        raise InvalidDataError("ray parameter p(Delta) is not monotone (Herglotz condition violated)")
    d1 = np.linspace(0.0, np.pi, n_out + 2)[1:-1]
    r_out, c_out, p_out = [], [], []
    for D in d1:
        p1 = float(dS(D))
        if p1 <= 0:
            continue

        def g(x, p1=p1):
            return np.arccosh(max(float(dS(x)) / p1, 1.0))

        val = quad(g, 0.0, D, limit=200, epsabs=1e-11, epsrel=1e-8)[0]
        r1 = R * np.exp(-val / np.pi)
        r_out.append(r1)
        c_out.append(r1 / p1)
        p_out.append(p1)
    return HerglotzResult(np.array(r_out), np.array(c_out), np.array(p_out), d1[:len(r_out)])
