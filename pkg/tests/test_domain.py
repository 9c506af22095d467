from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.domain import (
    PhysicalField,
    RectDomain,
    SpectralField,
    build_spectrum,
    cell_centered_points,
    evaluate_at,
    forward_transform,
    gradient,
    gradient_at,
    integrate,
    inverse_transform,
    lp_norm,
    sobolev_norm,
)


def test_spectrum_eigenvalues_and_nodes(sp_rect):
    lx, ly = sp_rect.domain.lx, sp_rect.domain.ly
    assert sp_rect.shape == (12, 10)
    assert sp_rect.grid_shape == (14, 12)
    assert sp_rect.lambda1 == pytest.approx(np.pi ** 2 * (1 / lx ** 2 + 1 / ly ** 2), rel=1e-14)
    assert sp_rect.eigenvalues[2, 4] == pytest.approx(np.pi ** 2 * (9 / lx ** 2 + 25 / ly ** 2), rel=1e-14)
    assert sp_rect.x_nodes[0] == 0.0 and sp_rect.x_nodes[-1] == pytest.approx(lx)
    # o símbolo da malha fica abaixo do exato e converge para ele nos modos baixos
    assert np.all(sp_rect.grid_eigenvalues <= sp_rect.eigenvalues)
    assert sp_rect.lambda1_of("grid") == pytest.approx(sp_rect.lambda1, rel=1e-2)


def test_invalid_domain_and_spectrum(unit_square):
    with pytest.raises(ValueError):
        RectDomain(0.0, 1.0)
    with pytest.raises(ValueError):
        build_spectrum(unit_square, 0)
    with pytest.raises(ValueError):
        build_spectrum(unit_square, 4).symbol("spectral")


def test_lowest_modes_unit_square(sp8):
    assert sp8.lowest_modes(4) == [(1, 1), (1, 2), (2, 1), (2, 2)]
    with pytest.raises(ValueError):
        sp8.lowest_modes(65)


def test_transform_round_trip_is_exact(sp_rect, rng):
    c = rng.standard_normal(sp_rect.shape)
    h = SpectralField(sp_rect, c)
    back = forward_transform(inverse_transform(h))
    np.testing.assert_allclose(back.coeffs, c, rtol=0, atol=1e-12)


def test_single_mode_nodal_values(sp_rect):
    h = SpectralField.mode(sp_rect, 2, 3)
    lx, ly = sp_rect.domain.lx, sp_rect.domain.ly
    x, y = np.meshgrid(sp_rect.x_nodes, sp_rect.y_nodes, indexing="ij")
    expected = 2.0 / np.sqrt(lx * ly) * np.sin(2 * np.pi * x / lx) * np.sin(3 * np.pi * y / ly)
    np.testing.assert_allclose(inverse_transform(h).values, expected, atol=1e-13)


def test_boundary_values_vanish(sp8, rng):
    v = inverse_transform(SpectralField(sp8, rng.standard_normal(sp8.shape))).values
    assert np.all(v[0, :] == 0) and np.all(v[-1, :] == 0)
    assert np.all(v[:, 0] == 0) and np.all(v[:, -1] == 0)


def test_parseval_with_trapezoid(sp_rect, rng):
    h = SpectralField(sp_rect, rng.standard_normal(sp_rect.shape))
    f = inverse_transform(h)
    energy = integrate(PhysicalField(sp_rect, f.values ** 2))
    assert energy == pytest.approx(float(np.sum(h.coeffs ** 2)), rel=1e-12)
    assert lp_norm(f, 2) == pytest.approx(sobolev_norm(h, 0.0), rel=1e-12)


def test_gradient_matches_pointwise_evaluation(sp_rect, rng):
    h = SpectralField(sp_rect, rng.standard_normal(sp_rect.shape))
    g = gradient(h)
    x, y = np.meshgrid(sp_rect.x_nodes, sp_rect.y_nodes, indexing="ij")
    pts = np.stack([x.ravel(), y.ravel()], axis=1)
    at = gradient_at(h, pts)
    np.testing.assert_allclose(g.x.ravel(), at[:, 0], atol=1e-8)
    np.testing.assert_allclose(g.y.ravel(), at[:, 1], atol=1e-8)
    np.testing.assert_allclose(evaluate_at(h, pts), inverse_transform(h).values.ravel(), atol=1e-11)


def test_lp_norm_rules(sp8):
    f = inverse_transform(SpectralField.mode(sp8, 1, 1))
    assert lp_norm(f, np.inf) == pytest.approx(np.max(np.abs(f.values)))
    with pytest.raises(ValueError):
        lp_norm(f, 0.5)


def test_sobolev_norm_of_mode(sp8):
    h = SpectralField.mode(sp8, 3, 2, amplitude=-2.0)
    lam = sp8.eigenvalues[2, 1]
    assert sobolev_norm(h, 1.5) == pytest.approx(2.0 * lam ** 0.75, rel=1e-14)
    assert sobolev_norm(h, -0.5) == pytest.approx(2.0 * lam ** -0.25, rel=1e-14)


@settings(max_examples=25, deadline=None)
@given(scale=st.floats(-50, 50, allow_nan=False), sigma=st.floats(-1, 2))
def test_sobolev_norm_is_homogeneous(scale, sigma):
    sp = build_spectrum(RectDomain(), 6)
    h = SpectralField(sp, np.arange(36, dtype=float).reshape(6, 6) / 36.0)
    assert sobolev_norm(h * scale, sigma) == pytest.approx(abs(scale) * sobolev_norm(h, sigma), rel=1e-12, abs=1e-300)


def test_field_algebra_and_resample(sp8, unit_square):
    a = SpectralField.mode(sp8, 1, 1)
    b = SpectralField.mode(sp8, 2, 1, amplitude=3.0)
    assert (a + b - b).coeffs[0, 0] == 1.0
    assert a.inner(b) == 0.0
    assert b.inner(b, sigma=2.0) == pytest.approx(9.0 * sp8.eigenvalues[1, 0])
    fine = build_spectrum(unit_square, 16)
    up = b.resample(fine)
    assert up.coeffs.shape == (16, 16) and up.coeffs[1, 0] == 3.0
    np.testing.assert_array_equal(up.resample(sp8).coeffs, b.coeffs)
    with pytest.raises(ValueError):
        a + up
    with pytest.raises(ValueError):
        SpectralField.mode(sp8, 9, 1)


def test_cell_centered_points(unit_square):
    pts, w = cell_centered_points(unit_square, 4)
    assert pts.shape == (16, 2)
    assert w.sum() == pytest.approx(1.0)
    assert pts.min() == pytest.approx(0.125) and pts.max() == pytest.approx(0.875)


def test_non_finite_input_is_rejected(sp8):
    values = np.zeros(sp8.grid_shape)
    values[3, 3] = np.nan
    with pytest.raises(ValueError):
        forward_transform(PhysicalField(sp8, values))
