import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tomolab.errors import (ConfigurationError, DomainError, InsufficientDataError, InvalidDataError,
                            NotClosedError, NotFinslerError, PerturbationRegimeError, ShapeError,
                            UnsupportedOrderError, WeightError)
from tomolab.fields import GridSpec, ScalarField, VectorField, make_phantom, radial_cutoff, spectral_gradient
from tomolab.geodesic import (Mixing2, OneForm, RadialProfile, TensorField2, boundary_distance_map,
                              gaussian_potential, geodesic_fan, geodesic_ray_transform, herglotz_check,
                              herglotz_invert, inward_direction, line_fan, mixing_ray_transform,
                              randers_boundary_map, reference_paths, symmetrize_A, trace_geodesic,
                              transverse_mixing, travel_time, zermelo_first_order)
from tomolab.vectorfield import MatrixWeight, xray_matrix_weighted
from tomolab.xray import LineSet, xray_forward

SEISMIC = RadialProfile((2.0, 0.0, -1.0))      # c = 2 - r^2
UNIT = RadialProfile.constant(1.0)


def boundary(phi, R=1.0):
    return R * np.array([np.cos(phi), np.sin(phi)])


# ------------------------------------------------------------------ profiles

def test_herglotz_check_examples():
    ok, margin = herglotz_check(UNIT)
    assert ok and margin == pytest.approx(1.0)
    assert herglotz_check(SEISMIC)[0]
    expo = RadialProfile.fit(np.exp, R=2.0)
    ok, margin = herglotz_check(expo)
    assert not ok and margin < 0


def test_herglotz_margin_matches_symbolic_derivative():
    r = np.linspace(0, 1, 1024)
    exact = (2 + r ** 2) / (2 - r ** 2) ** 2
    assert herglotz_check(SEISMIC)[1] == pytest.approx(exact.min(), rel=1e-12)


def test_profile_validation():
    with pytest.raises(ConfigurationError):
        RadialProfile(tuple(range(1, 9)))
    with pytest.raises(DomainError):
        RadialProfile((1.0, -2.0))
    c = SEISMIC.scaled(3.0)
    assert c(0.5) == pytest.approx(3 * SEISMIC(0.5))
    assert SEISMIC.derivative(0.5) == pytest.approx(-1.0)
    assert RadialProfile(**SEISMIC.to_json())(0.3) == SEISMIC(0.3)


# ------------------------------------------------------------------- tracing

def test_straight_chord_for_unit_speed():
    phi, alpha = 0.4, 0.6
    x0 = boundary(phi)
    d = inward_direction(phi, alpha)
    path = trace_geodesic(UNIT, x0, d)
    L = -2 * x0 @ d
    assert np.linalg.norm(path.end - (x0 + L * d)) <= 1e-8
    assert path.length == pytest.approx(L, abs=1e-8)


def test_clairaut_invariant():
    path = trace_geodesic(SEISMIC, boundary(1.0), inward_direction(1.0, 0.7))
    x, v = path.xs, path.velocities(SEISMIC)
    r = np.hypot(x[:, 0], x[:, 1])
    sin_angle = (x[:, 0] * v[:, 1] - x[:, 1] * v[:, 0]) / (r * np.hypot(v[:, 0], v[:, 1]))
    inv = r * sin_angle / SEISMIC(r)
    assert np.ptp(inv) <= 1e-6
    assert np.ptp(path.angular_momentum()) <= 1e-6


def test_reversal_retraces_path():
    fwd = trace_geodesic(SEISMIC, boundary(0.3), inward_direction(0.3, -0.5))
    v_end = fwd.velocities(SEISMIC)[-1]
    end = fwd.end / np.linalg.norm(fwd.end)     # snap onto the circle (bisection leaves < 1e-10)
    back = trace_geodesic(SEISMIC, end, -v_end)
    assert np.linalg.norm(back.end - fwd.xs[0]) <= 1e-8
    assert back.length == pytest.approx(fwd.length, abs=1e-8)
    # every backward sample lies on the forward curve
    rev = fwd.reversed()
    mid = back.xs[len(back.xs) // 2]
    assert np.min(np.linalg.norm(rev.xs - mid, axis=1)) <= fwd.step


@settings(max_examples=12, deadline=None)
@given(st.floats(0, 2 * np.pi), st.floats(-1.5, 1.5))
def test_hamiltonian_conserved(phi, alpha):
    path = trace_geodesic(SEISMIC, boundary(phi), inward_direction(phi, alpha))
    assert path.h_drift <= 1e-8
    assert abs(np.linalg.norm(path.end) - 1.0) <= 1e-9


def test_trace_preconditions():
    with pytest.raises(ConfigurationError):
        trace_geodesic(SEISMIC, np.array([0.5, 0.0]), np.array([-1.0, 0.0]))
    with pytest.raises(ConfigurationError):
        trace_geodesic(SEISMIC, boundary(0.0), np.array([1.0, 0.0]))
    with pytest.raises(ConfigurationError):
        trace_geodesic(RadialProfile.fit(np.exp, R=2.0), boundary(0.0, 2.0), np.array([-1.0, 0.0]))


# -------------------------------------------------------------- travel times

def test_antipodal_unit_speed():
    T, _ = travel_time(UNIT, boundary(0.0), boundary(np.pi))
    assert T == pytest.approx(2.0, abs=1e-6)


@pytest.mark.parametrize("kappa", [0.5, 3.0])
def test_constant_speed_scaling(kappa):
    a, b = 0.2, 1.9
    T, _ = travel_time(RadialProfile.constant(kappa), boundary(a), boundary(b))
    assert T == pytest.approx(2 * np.sin((b - a) / 2) / kappa, abs=1e-6)


def test_antipodal_against_finer_step():
    T, _ = travel_time(SEISMIC, boundary(0.0), boundary(np.pi), step=0.01)
    T_fine, _ = travel_time(SEISMIC, boundary(0.0), boundary(np.pi), step=0.001)
    assert T == pytest.approx(T_fine, rel=1e-6)


def test_distance_map_unit_speed():
    D = boundary_distance_map(UNIT, 12)
    dphi = D.angles[None, :] - D.angles[:, None]
    assert np.max(np.abs(D.d - 2 * np.sin(np.abs(dphi) / 2))) <= 1e-6
    assert np.all(np.diag(D.d) == 0)


def test_distance_map_symmetry_and_triangle():
    D = boundary_distance_map(SEISMIC, 16)
    assert np.max(np.abs(D.d - D.d.T)) <= 1e-8
    rng = np.random.default_rng(0)
    triples = [tuple(rng.choice(16, 3, replace=False)) for _ in range(50)]
    assert D.triangle_defect(triples) <= 1e-6
    assert np.max(np.abs(D.antisymmetric_part)) <= 1e-8


def test_distance_map_size_limit():
    with pytest.raises(ConfigurationError):
        reference_paths(UNIT, 65)


# ------------------------------------------------------------------ herglotz

def test_herglotz_constant_profile():
    delta = np.linspace(np.pi / 64, np.pi, 64)
    H = herglotz_invert(delta, 2 * np.sin(delta / 2))
    r = np.linspace(0.2, 0.95, 40)
    assert np.max(np.abs(H.interp(r) - 1.0)) <= 0.01


def test_herglotz_round_trip():
    m = 32
    D = boundary_distance_map(SEISMIC, m)
    H = herglotz_invert(D.angles[1:m // 2 + 1], D.d[0, 1:m // 2 + 1])
    r = np.linspace(0.2, 0.9, 50)
    assert np.max(np.abs(H.interp(r) / SEISMIC(r) - 1.0)) <= 0.02


def test_herglotz_scaling_covariance():
    delta = np.linspace(np.pi / 48, np.pi, 48)
    T = 2 * np.sin(delta / 2) - 0.1 * np.sin(delta / 2) ** 2     # p = cos(D/2)(1 - 0.1 sin(D/2)), decreasing
    a = herglotz_invert(delta, T)
    b = herglotz_invert(delta, T / 2)
    assert np.allclose(b.c, 2 * a.c, rtol=1e-6)
    assert np.allclose(b.r, a.r, rtol=1e-6)


def test_herglotz_rejects_bad_data():
    delta = np.linspace(np.pi / 32, np.pi, 32)
    with pytest.raises(InvalidDataError):
        herglotz_invert(delta, 2 * np.sin(delta / 2) + 0.2 * np.sin(6 * delta))
    with pytest.raises(InsufficientDataError):
        herglotz_invert(delta[:-1], 2 * np.sin(delta[:-1] / 2))
    with pytest.raises(InsufficientDataError):
        herglotz_invert(delta[-3:], 2 * np.sin(delta[-3:] / 2))


# ---------------------------------------------------------------- transforms

def test_scalar_transform_matches_xray():
    g = GridSpec(2, 96)
    f = make_phantom(g, "gaussian-bumps", seed=1)
    lines = LineSet(g, np.pi * np.arange(12) / 12, np.linspace(-0.85, 0.85, 35))
    paths = line_fan(UNIT, lines)
    got = geodesic_ray_transform(f, paths, UNIT).reshape(lines.shape)
    ref = xray_forward(f, lines).values
    assert np.max(np.abs(got - ref)) <= 1e-3 * np.max(np.abs(ref))


def test_missing_paths_give_nan():
    g = GridSpec(2, 32)
    lines = LineSet(g, np.array([0.0]), np.array([-1.2, 0.0, 1.2]))
    vals = geodesic_ray_transform(make_phantom(g, "gaussian-bumps", seed=0), line_fan(UNIT, lines), UNIT)
    assert np.isnan(vals[0]) and np.isnan(vals[2]) and np.isfinite(vals[1])


def test_vector_potential_gauge_curved():
    g = GridSpec(2, 128)
    X, Y = g.mesh()
    phi = ScalarField(g, np.exp(-((X - 0.2) ** 2 + Y ** 2) / (2 * 0.15 ** 2)) * radial_cutoff(g.radius(), 0.6, 0.8))
    fan = geodesic_fan(SEISMIC, 8, 8)
    vals = geodesic_ray_transform(spectral_gradient(phi), fan, SEISMIC)
    assert np.max(np.abs(vals)) <= 1e-3 * phi.max_abs()
    # a non-gradient field is visible on the same fan
    sw = make_phantom(g, "divergence-free-swirl", seed=0)
    assert np.max(np.abs(geodesic_ray_transform(sw, fan, SEISMIC))) > 1e-3 * sw.max_abs()


def test_tensor_potential_gauge_flat():
    g = GridSpec(2, 128)
    X, Y = g.mesh()
    cut = radial_cutoff(g.radius(), 0.5, 0.8)
    v1 = ScalarField(g, np.exp(-((X - 0.1) ** 2 + Y ** 2) / (2 * 0.15 ** 2)) * cut)
    v2 = ScalarField(g, np.exp(-(X ** 2 + (Y + 0.1) ** 2) / (2 * 0.12 ** 2)) * cut)
    d1, d2 = spectral_gradient(v1).components, spectral_gradient(v2).components
    # (sym grad v)_ij = (d_i v_j + d_j v_i) / 2
    h = TensorField2.from_symmetric(g, d1[0], 0.5 * (d2[0] + d1[1]), d2[1])
    fan = geodesic_fan(UNIT, 8, 8)
    vals = geodesic_ray_transform(h, fan, UNIT)
    assert np.max(np.abs(vals)) <= 1e-3 * max(v1.max_abs(), v2.max_abs())


def test_mixing_remainder_and_projection():
    g = GridSpec(2, 48, 1.2)
    rng = np.random.default_rng(2)
    h = TensorField2(g, rng.standard_normal((2, 2) + g.shape))
    A1 = np.eye(2) + 0.3 * rng.standard_normal((2, 2))
    A2 = np.eye(2) + 0.3 * rng.standard_normal((2, 2))
    A = Mixing2(g, A1, A2)
    hs = symmetrize_A(h, A)
    rem = TensorField2(g, h.components - hs.components)
    fan = geodesic_fan(SEISMIC, 6, 6)
    assert np.max(np.abs(mixing_ray_transform(rem, A, fan, SEISMIC))) <= 1e-8 * h.max_abs()
    assert np.max(np.abs(symmetrize_A(hs, A).components - hs.components)) <= 1e-10 * h.max_abs()
    full = mixing_ray_transform(h, A, fan, SEISMIC)
    assert np.allclose(full, mixing_ray_transform(hs, A, fan, SEISMIC), atol=1e-8 * h.max_abs())


def test_transverse_mixing_matches_euclidean():
    g = GridSpec(2, 96)
    h = make_phantom(g, "divergence-free-swirl", seed=3) + spectral_gradient(make_phantom(g, "gaussian-bumps", seed=3)) * 3.0
    lines = LineSet(g, np.pi * np.arange(10) / 10, np.linspace(-0.85, 0.85, 29))
    ref = xray_matrix_weighted(h, MatrixWeight.rotation90(g), lines).values
    # the mixing contracts A^T h with the velocity; reversed lines restore the orientation
    paths = line_fan(UNIT, lines, reverse=True)
    got = mixing_ray_transform(h, transverse_mixing(g), paths, UNIT).reshape(lines.shape)
    assert np.max(np.abs(got - ref)) <= 1e-3 * np.max(np.abs(ref))


def test_mixing_errors():
    g = GridSpec(2, 16)
    with pytest.raises(WeightError):
        Mixing2(g, [[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(WeightError):
        mixing_ray_transform(VectorField(g, (np.zeros(g.shape),) * 2), np.eye(2), [], UNIT)
    with pytest.raises(UnsupportedOrderError):
        geodesic_ray_transform(np.zeros((2, 2, 2, 16, 16)), [], UNIT)
    with pytest.raises(ShapeError):
        TensorField2(g, np.zeros((2, 16, 16)))


# ------------------------------------------------------------------- randers

@pytest.fixture(scope="module")
def randers_setup():
    m = 12
    grid = GridSpec(2, 64, 1.6)
    paths = reference_paths(SEISMIC, m)
    return m, grid, paths, boundary_distance_map(SEISMIC, m, paths=paths)


def test_randers_zero_form(randers_setup):
    m, grid, paths, D = randers_setup
    DF = randers_boundary_map(SEISMIC, OneForm.zero(grid), m, paths=paths)
    assert np.array_equal(DF.d, D.d)


def test_randers_gauge_invariance(randers_setup):
    m, grid, paths, D = randers_setup
    psi, _ = gaussian_potential(grid, (0.1, -0.1), 0.12, 0.05)
    DF = randers_boundary_map(SEISMIC, OneForm.exact(psi), m, paths=paths)
    assert np.max(np.abs(DF.d - D.d)) <= 1e-8


def test_randers_decoupling(randers_setup):
    m, grid, paths, D = randers_setup
    phi, exact = gaussian_potential(grid, (0.6, 0.2), 0.2, 0.15)
    DF = randers_boundary_map(SEISMIC, OneForm.exact(phi), m, paths=paths)
    assert np.max(np.abs(DF.symmetric_part - D.d)) <= 1e-8
    fv = exact(DF.points)
    assert np.max(np.abs(DF.antisymmetric_part - (fv[None, :] - fv[:, None]))) <= 1e-6


def test_randers_rejects_open_and_large_forms(randers_setup):
    m, grid, paths, _ = randers_setup
    sw = make_phantom(grid, "divergence-free-swirl", seed=0)
    with pytest.raises(NotClosedError):
        randers_boundary_map(SEISMIC, OneForm(grid, sw.components).scaled(0.1 / sw.max_abs()), m, paths=paths)
    phi, _ = gaussian_potential(grid, (0.0, 0.0), 0.2, 1.0)
    big = OneForm.exact(phi)
    assert big.closed
    with pytest.raises(NotFinslerError):
        randers_boundary_map(SEISMIC, big, m, paths=paths)


def test_zermelo_cases():
    grid = GridSpec(2, 64, 1.6)
    zero = zermelo_first_order(SEISMIC, VectorField(grid, (np.zeros(grid.shape),) * 2))
    assert zero.max_abs() == 0 and zero.closed
    psi, _ = gaussian_potential(grid, (0.1, 0.1), 0.2, 0.01)
    dpsi = spectral_gradient(psi)
    c2 = SEISMIC(np.minimum(grid.radius(), SEISMIC.R)) ** 2
    W = VectorField(grid, tuple(c2 * d for d in dpsi.components))
    beta = zermelo_first_order(SEISMIC, W)
    assert beta.closed
    assert np.allclose(beta.components[0], -dpsi.components[0], atol=1e-14)
    sw = make_phantom(grid, "divergence-free-swirl", seed=1)
    beta = zermelo_first_order(SEISMIC, sw * (0.05 / sw.max_abs()))
    assert not beta.closed
    with pytest.raises(NotClosedError):
        randers_boundary_map(SEISMIC, beta, 4)
    with pytest.raises(PerturbationRegimeError):
        zermelo_first_order(SEISMIC, sw * (1.0 / sw.max_abs()))
