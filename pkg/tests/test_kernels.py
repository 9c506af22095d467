from __future__ import annotations

import numpy as np
import pytest

from src.domain import SpectralField, build_spectrum, cell_centered_points, sobolev_norm
from src.fracops import kernel_assemble, kernel_quadratic_form
from src.ineqlab.spectral import KernelCheck


@pytest.fixture
def coarse_table(unit_square):
    points, weights = cell_centered_points(unit_square, 6)
    return kernel_assemble(0.25, unit_square, points, weights)


def test_kernels_are_nonnegative_and_symmetric(coarse_table):
    k = coarse_table.k_values
    assert np.all(k >= 0) and np.all(coarse_table.b_values > 0)
    np.testing.assert_allclose(k, k.T, rtol=1e-12)
    assert np.all(np.diag(k) == 0)


def test_kernel_decays_with_distance(coarse_table):
    pts = coarse_table.points
    centre = np.argmin(np.sum((pts - 0.5) ** 2, axis=1))
    dist = np.sqrt(np.sum((pts - pts[centre]) ** 2, axis=1))
    near, far = np.argsort(dist)[1], np.argmax(dist)
    assert coarse_table.k_values[centre, near] > coarse_table.k_values[centre, far]
    assert 0 < coarse_table.decay_constant < np.inf


def test_boundary_kernel_grows_towards_the_boundary(coarse_table):
    pts = coarse_table.points
    d = np.minimum(np.minimum(pts[:, 0], 1 - pts[:, 0]), np.minimum(pts[:, 1], 1 - pts[:, 1]))
    assert coarse_table.b_values[np.argmin(d)] > coarse_table.b_values[np.argmax(d)]


def test_kernel_assemble_rejects_bad_points(unit_square):
    with pytest.raises(ValueError):
        kernel_assemble(0.25, unit_square, [[0.5, 0.5], [0.5, 0.5]])
    with pytest.raises(ValueError):
        kernel_assemble(0.25, unit_square, [[0.0, 0.5], [0.5, 0.5]])
    with pytest.raises(ValueError):
        kernel_assemble(1.0, unit_square, [[0.2, 0.5], [0.5, 0.5]])


def test_quadratic_form_is_positive_for_mode(coarse_table, unit_square):
    psi = SpectralField.mode(build_spectrum(unit_square, 4), 1, 1)
    value = kernel_quadratic_form(coarse_table, psi)
    assert value > 0
    assert kernel_quadratic_form(coarse_table, psi, self_cell=False) < value


@pytest.mark.slow
def test_kernel_representation_of_lowest_mode(unit_square):
    sp = build_spectrum(unit_square, 4)
    psi = SpectralField.mode(sp, 1, 1)
    points, weights = cell_centered_points(unit_square, 16)
    table = kernel_assemble(0.25, unit_square, points, weights)
    exact = sobolev_norm(psi, 0.25) ** 2
    assert kernel_quadratic_form(table, psi) == pytest.approx(exact, rel=0.02)


@pytest.mark.slow
def test_kernel_check_passes(sp16):
    df = KernelCheck(sp16).run_many([0, 1])
    assert len(df) == 1
    assert df["verdict"].all()
