import numpy as np
import pytest

from tomolab.errors import ConfigurationError, ConvergenceError, SizeError
from tomolab.fields import GridSpec, RegionMask, ScalarField, radial_cutoff
from tomolab.partialdata import (PartialProblem, _system, combined_rank_test, curl_on_V, forward_data,
                                 pseudo_inverse_solution, reconstruct_partial, restrict_sinogram)
from tomolab.xray import LineSet, Sinogram, default_lines, lines_through_region, xray_forward


def scalar_setup(n=16, angles=60):
    g = GridSpec(2, n)
    c = n // 2
    V = RegionMask.box(g, (c - 2, c - 2), (c + 1, c + 1))
    return g, V, default_lines(g, angles, oversample=2)


def bump_outside(g, V):
    X, Y = g.mesh()
    f = np.exp(-((X - 0.35) ** 2 + (Y - 0.3) ** 2) / (2 * 0.2 ** 2)) * radial_cutoff(g.radius(), 0.6, 0.9)
    return ScalarField(g, np.where(V.inside, 0.0, f))


def test_restrict_sinogram():
    g, V, lines = scalar_setup()
    sino = xray_forward(bump_outside(g, V), lines)
    # offsets within [-L, L] so every line crosses the square
    inner = LineSet(g, lines.angles, np.linspace(-1, 1, 31))
    assert not np.isnan(restrict_sinogram(xray_forward(bump_outside(g, V), inner), RegionMask.full(g)).values).any()
    r = restrict_sinogram(sino, V)
    flags = lines_through_region(lines, V)
    assert np.isnan(r.values).sum() == (~flags).sum()
    assert np.array_equal(r.values[flags], sino.values[flags])


def test_restrict_sinogram_all_lines_hit():
    g = GridSpec(2, 16)
    lines = LineSet(g, np.pi * np.arange(8) / 8, np.linspace(-0.5, 0.5, 5))
    V = RegionMask.disk(g, 0.8)
    r = restrict_sinogram(Sinogram(lines, np.ones(lines.shape)), V)
    assert np.isnan(r.values).sum() == 0


def test_problem_validation():
    g, V, lines = scalar_setup()
    with pytest.raises(ConfigurationError):
        PartialProblem(g, RegionMask.empty(g), lines)
    with pytest.raises(ConfigurationError):
        PartialProblem(g, V, lines, kind="tensor")
    far = LineSet(g, np.array([0.0]), np.array([-1.4, 1.4]))
    with pytest.raises(ConfigurationError):
        PartialProblem(g, V, far)
    big = GridSpec(2, 32)
    with pytest.raises(SizeError):
        combined_rank_test(PartialProblem(big, RegionMask.box(big, (14, 14), (17, 17)), default_lines(big, 10)))


def test_manifest_records_mu():
    g, V, lines = scalar_setup()
    m = PartialProblem(g, V, lines, lam=1e-8).manifest()
    assert m["mu"] == pytest.approx(1e-4) and m["mask_digest"] == V.digest()


def test_identity_constraint_is_restriction():
    g, V, lines = scalar_setup()
    _, B, _ = _system(PartialProblem(g, V, lines))
    f = np.random.default_rng(0).normal(size=g.size)
    assert np.allclose(B @ f, f[V.inside.ravel()], atol=1e-14)


def test_scalar_rank_and_full_data_gain():
    g, V, lines = scalar_setup()
    r = combined_rank_test(PartialProblem(g, V, lines))
    assert r["rank_deficiency"] == 0 and r["sigma_min"] > 0
    full = combined_rank_test(PartialProblem(g, V, lines, restrict=False))
    assert full["rank_deficiency"] == 0
    assert full["sigma_min"] >= r["sigma_min"]


def test_rank_monotone_in_mask():
    g = GridSpec(2, 16)
    lines = default_lines(g, 40, oversample=2)
    masks = [RegionMask.box(g, (7, 7), (9, 9)), RegionMask.box(g, (6, 6), (10, 10)), RegionMask.box(g, (4, 4), (12, 12))]
    sig = [combined_rank_test(PartialProblem(g, V, lines))["sigma_min"] for V in masks]
    assert sig[0] <= sig[1] * (1 + 1e-9) <= sig[2] * (1 + 1e-9) ** 2


def test_vector_rank():
    g = GridSpec(2, 12)
    V = RegionMask.box(g, (4, 4), (8, 8))
    r = combined_rank_test(PartialProblem(g, V, default_lines(g, 36, oversample=2), kind="vector"))
    assert r["rank_deficiency"] == 0


def test_zero_data_gives_zero():
    g, V, lines = scalar_setup()
    p = PartialProblem(g, V, lines)
    rec = reconstruct_partial(p, Sinogram(lines, np.zeros(lines.shape)))
    assert np.max(np.abs(rec.unknown)) <= 1e-6


def test_scalar_reconstruction_and_descent():
    g, V, lines = scalar_setup()
    p = PartialProblem(g, V, lines, lam=1e-8)
    truth = bump_outside(g, V)
    data = restrict_sinogram(forward_data(p, truth), V)
    rec = reconstruct_partial(p, data)
    err = np.linalg.norm(rec.field.values - truth.values) / np.linalg.norm(truth.values)
    assert err <= 0.2
    assert rec.data_residual <= rec.zero_data_residual
    oracle = pseudo_inverse_solution(p, data)
    assert np.linalg.norm(oracle - truth.values.ravel()) <= 1e-6 * np.linalg.norm(truth.values)


def test_missing_flagged_data_rejected():
    g, V, lines = scalar_setup()
    p = PartialProblem(g, V, lines)
    vals = np.full(lines.shape, np.nan)
    with pytest.raises(Exception):
        reconstruct_partial(p, Sinogram(lines, vals))


def test_larger_lambda_never_lowers_data_fit():
    g, V, lines = scalar_setup(n=12, angles=30)
    truth = bump_outside(g, V)
    res = []
    for lam in (1e-4, 2e-4, 4e-4):
        p = PartialProblem(g, V, lines, lam=lam)
        res.append(reconstruct_partial(p, restrict_sinogram(forward_data(p, truth), V)).data_residual)
    assert res[0] <= res[1] * (1 + 1e-8) and res[1] <= res[2] * (1 + 1e-8)


def test_convergence_error_carries_residual():
    g, V, lines = scalar_setup(n=12, angles=30)
    p = PartialProblem(g, V, lines)
    data = restrict_sinogram(forward_data(p, bump_outside(g, V)), V)
    with pytest.raises(ConvergenceError) as e:
        reconstruct_partial(p, data, max_iter=3)
    assert e.value.residual > 0 and e.value.iterations == 3


def _vector_solution():
    g = GridSpec(2, 12)
    V = RegionMask.box(g, (4, 4), (8, 8))
    lines = default_lines(g, 36, oversample=2)
    p = PartialProblem(g, V, lines, kind="vector")
    X, Y = g.mesh()
    psi = np.exp(-((X - 0.35) ** 2 + (Y - 0.35) ** 2) / (2 * 0.15 ** 2)) * radial_cutoff(g.radius(), 0.6, 0.9)
    psi = ScalarField(g, np.where(V.dilate(2).inside, 0.0, psi))
    rec = reconstruct_partial(p, restrict_sinogram(forward_data(p, psi), V))
    return p, psi, rec


def test_vector_reconstruction():
    p, psi, rec = _vector_solution()
    err = np.linalg.norm(rec.unknown - psi.values.ravel()) / np.linalg.norm(psi.values)
    assert err <= 0.2
    from tomolab.vectorfield import curl2d
    full = np.max(np.abs(curl2d(rec.field).values))
    assert np.max(np.abs(curl_on_V(rec, p))) <= 1e-3 * full


@pytest.mark.xfail(strict=True, reason="penalty formulation enforces P(D)|_V only up to lam/mu, not solver tolerance")
def test_vector_curl_on_V_at_solver_tolerance():
    p, psi, rec = _vector_solution()
    assert np.max(np.abs(curl_on_V(rec, p))) <= 10 * 1e-12
