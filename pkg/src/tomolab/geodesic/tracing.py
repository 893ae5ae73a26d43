"""Ray tracing for g = c^-2 e with a radial c, travel times by shooting,
and boundary distance maps.

Hamiltonian H(x, p) = c(|x|)^2 |p|^2 / 2 with H = 1/2, so the flow
parameter is g-arclength (travel time):
    x' = c^2 p,    p' = -c c'(r) (x / r) |p|^2.
"""
from dataclasses import dataclass
from math import atan2, cos, hypot, pi, sin

import numpy as np
from scipy.optimize import brentq

from ..errors import ConfigurationError, ShootingError, TrappingError
from ..parallel import pmap
from .profile import herglotz_check

H_TOL = 1e-8
EXIT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class GeodesicPath:
    xs: np.ndarray          # (K, 2) positions
    ps: np.ndarray          # (K, 2) momenta
    ts: np.ndarray          # (K,) travel-time parameter
    exited: bool
    step: float
    h_drift: float

    @property
    def end(self):
        return self.xs[-1]

    @property
    def length(self):
        return float(self.ts[-1])

    def velocities(self, c):
        r = np.hypot(self.xs[:, 0], self.xs[:, 1])
        return (c(r) ** 2)[:, None] * self.ps

    def angular_momentum(self):
        return self.xs[:, 0] * self.ps[:, 1] - self.xs[:, 1] * self.ps[:, 0]

    def hamiltonian(self, c):
        r = np.hypot(self.xs[:, 0], self.xs[:, 1])
        return 0.5 * c(r) ** 2 * (self.ps ** 2).sum(axis=1)

    def reversed(self):
        T = self.ts[-1]
        return GeodesicPath(self.xs[::-1].copy(), -self.ps[::-1], T - self.ts[::-1],
                            self.exited, self.step, self.h_drift)

    def rotated(self, phi):
        Rm = np.array([[cos(phi), -sin(phi)], [sin(phi), cos(phi)]])
        return GeodesicPath(self.xs @ Rm.T, self.ps @ Rm.T, self.ts, self.exited, self.step, self.h_drift)


def _make_rhs(c):
    co = c.coeffs
    dco = c._dcoeffs

    def rhs(x, y, px, py):
        r = hypot(x, y)
        cv = 0.0
        for a in reversed(co):
            cv = cv * r + a
        c2 = cv * cv
        if r > 0.0:
            dv = 0.0
            for a in reversed(dco):
                dv = dv * r + a
            fac = cv * dv / r * (px * px + py * py)
        else:
            fac = 0.0
        return c2 * px, c2 * py, -fac * x, -fac * y

    return rhs


def _rk4(rhs, s, dt):
    x, y, px, py = s
    k1 = rhs(x, y, px, py)
    h2 = 0.5 * dt
    k2 = rhs(x + h2 * k1[0], y + h2 * k1[1], px + h2 * k1[2], py + h2 * k1[3])
    k3 = rhs(x + h2 * k2[0], y + h2 * k2[1], px + h2 * k2[2], py + h2 * k2[3])
    k4 = rhs(x + dt * k3[0], y + dt * k3[1], px + dt * k3[2], py + dt * k3[3])
    w = dt / 6.0
    return (x + w * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            y + w * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
            px + w * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]),
            py + w * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3]))


def _trace_once(c, rhs, x0, p0, dt, t_max):
    R = c.R
    s = (x0[0], x0[1], p0[0], p0[1])
    out = [s]
    ts = [0.0]
    t = 0.0
    k = 0
    while t < t_max:
        new = _rk4(rhs, s, dt)
        k += 1
        if k > 1 and hypot(new[0], new[1]) >= R:
            # bisection on the partial step for |x| = R
            lo, hi = 0.0, dt
            while hi - lo > EXIT_TOL * max(dt, 1.0) * 1e-2 and hi - lo > 1e-16:
                mid = 0.5 * (lo + hi)
                m = _rk4(rhs, s, mid)
                if hypot(m[0], m[1]) >= R:
                    hi = mid
                else:
                    lo = mid
            tau = 0.5 * (lo + hi)
            last = _rk4(rhs, s, tau)
            out.append(last)
            ts.append(t + tau)
            return np.array(out), np.array(ts), True
        s = new
        t += dt
        out.append(s)
        ts.append(t)
    return np.array(out), np.array(ts), False


def trace_geodesic(c, x0, xi, step=0.01, h_tol=H_TOL, max_halvings=10, check=True):
    """Trace from boundary point ``x0`` along Euclidean direction ``xi``.

    ``xi`` is rescaled to unit g-speed.  The step is halved until the
    relative drift of H stays below ``h_tol``.
    """
    if check:
        ok, _ = herglotz_check(c)
        if not ok:
            raise ConfigurationError("profile violates the Herglotz condition")
    x0 = np.asarray(x0, dtype=float)
    xi = np.asarray(xi, dtype=float)
    r0 = hypot(*x0)
    if abs(r0 - c.R) > 1e-9 * c.R:
        raise ConfigurationError("x0 must lie on the boundary circle")
    if xi @ x0 >= 0:
        raise ConfigurationError("xi must point into the disk")
    cb = float(c(r0))
    p0 = xi / np.linalg.norm(xi) / cb
    rhs = _make_rhs(c)
    t_max = 100 * 2 * c.R / c.min_on_disk()
    # keep at least ~40 steps on short (near-grazing) chords
    chord = 2 * c.R * abs(xi @ x0) / (np.linalg.norm(xi) * r0)
    dt = min(step, max(chord / (40 * cb), 1e-7))
    for _ in range(max_halvings + 1):
        S, ts, exited = _trace_once(c, rhs, x0, p0, dt, t_max)
        if not exited:
            raise TrappingError(f"no boundary exit within parameter {t_max:.3g}")
        r = np.hypot(S[:, 0], S[:, 1])
        H = 0.5 * c(r) ** 2 * (S[:, 2] ** 2 + S[:, 3] ** 2)
        drift = float(np.max(np.abs(H - 0.5)) / 0.5)
        if drift <= h_tol:
            return GeodesicPath(S[:, :2], S[:, 2:], ts, True, dt, drift)
        dt *= 0.5
    return GeodesicPath(S[:, :2], S[:, 2:], ts, True, dt, drift)


def inward_direction(phi, alpha):
    """Unit vector at boundary angle phi, rotated by alpha from the inward normal."""
    n = np.array([-cos(phi), -sin(phi)])
    return np.array([cos(alpha) * n[0] - sin(alpha) * n[1], sin(alpha) * n[0] + cos(alpha) * n[1]])


def angular_travel(path):
    """Signed polar-angle change along the path (counterclockwise > 0)."""
    a = np.unwrap(np.arctan2(path.xs[:, 1], path.xs[:, 0]))
    return float(a[-1] - a[0])


def shoot(c, phi0, delta, step=0.01, angle_tol=1e-8):
    """Geodesic from boundary angle phi0 to phi0 + delta (mod 2 pi)."""
    delta = float(delta) % (2 * pi)
    if delta == 0.0:
        raise ConfigurationError("start and end points coincide")
    target = min(delta, 2 * pi - delta)
    sign = -1.0 if delta <= pi else 1.0      # alpha < 0 turns counterclockwise
    x0 = c.R * np.array([cos(phi0), sin(phi0)])
    cache = {}

    def travel(alpha):
        if alpha not in cache:
            path = trace_geodesic(c, x0, inward_direction(phi0, sign * alpha), step, check=False)
            cache[alpha] = path
        return abs(angular_travel(cache[alpha]))

    if abs(target - pi) < 1e-15:
        alpha = 0.0
    else:
        hi = 0.5 * pi - 1e-9
        f_lo, f_hi = travel(0.0) - target, travel(hi) - target
        if f_lo * f_hi > 0:
            raise ShootingError("shooting bracket failure",
                                diagnostics={"delta": delta, "f_lo": f_lo, "f_hi": f_hi})
        alpha = brentq(lambda a: travel(a) - target, 0.0, hi, xtol=1e-14, rtol=1e-15, maxiter=200)
    travel(alpha)
    path = cache[alpha]
    mismatch = abs(travel(alpha) - target)
    if mismatch > angle_tol:
        raise ShootingError("shooting did not reach the angular tolerance",
                            diagnostics={"delta": delta, "mismatch": mismatch, "alpha": alpha})
    return path, sign * alpha


def travel_time(c, x, x_prime, step=0.01):
    """(T, path) between two boundary points."""
    ok, _ = herglotz_check(c)
    if not ok:
        raise ConfigurationError("profile violates the Herglotz condition")
    phi0 = atan2(x[1], x[0])
    phi1 = atan2(x_prime[1], x_prime[0])
    path, _ = shoot(c, phi0, phi1 - phi0, step)
    return path.length, path


@dataclass(frozen=True, eq=False)
class BoundaryDistanceMap:
    angles: np.ndarray
    d: np.ndarray
    R: float = 1.0

    @property
    def symmetric_part(self):
        return 0.5 * (self.d + self.d.T)

    @property
    def antisymmetric_part(self):
        return 0.5 * (self.d - self.d.T)

    @property
    def points(self):
        return self.R * np.column_stack([np.cos(self.angles), np.sin(self.angles)])

    def triangle_defect(self, triples):
        return max(self.d[i, k] - self.d[i, j] - self.d[j, k] for i, j, k in triples)


def reference_paths(c, m, step=0.01):
    """Shooting solutions from angle 0 to 2 pi k / m, k = 1 .. m-1."""
    ok, _ = herglotz_check(c)
    if not ok:
        raise ConfigurationError("profile violates the Herglotz condition")
    if not (2 <= m <= 64):
        raise ConfigurationError("m must lie in 2..64")
    return pmap(lambda k: shoot(c, 0.0, 2 * pi * k / m, step)[0], range(1, m))


def boundary_distance_map(c, m, step=0.01, paths=None):
    """All ordered pairs of m uniform boundary points.

    Rotational symmetry gives d(i, j) = T(2 pi (j - i) / m); every
    separation k = 1 .. m-1 is shot independently, so d(i, j) and d(j, i)
    come from distinct (clockwise / counterclockwise) solves.
    """
    paths = reference_paths(c, m, step) if paths is None else paths
    T = np.array([0.0] + [p.length for p in paths])
    i = np.arange(m)
    d = T[(i[None, :] - i[:, None]) % m]
    return BoundaryDistanceMap(2 * pi * i / m, d, c.R)
