from __future__ import annotations

import pytest

from src.ineqlab.spectral import (
    AdjointShiftCheck,
    GradientIdentityCheck,
    MollifierCheck,
    adjoint_shift_gap,
    gradient_identity_gap,
)


@pytest.mark.parametrize("a, b, s", [(0.5, 0.5, 0.25), (1.0, -0.5, 0.7), (-0.5, 1.0, -0.3)])
def test_adjoint_shift_moves_powers_between_factors(band_field, a, b, s):
    other = band_field.truncate(4) * 3.0 + band_field
    assert adjoint_shift_gap(band_field, other, a, b, s) < 1e-13


@pytest.mark.parametrize("a, b", [(0.0, 0.0), (0.5, -0.5), (-0.25, 0.75)])
def test_gradient_identity_on_nodes(band_field, a, b):
    other = band_field * -2.0 + band_field.truncate(3)
    assert gradient_identity_gap(band_field, other, a, b) < 1e-10


@pytest.mark.parametrize("check_cls", [AdjointShiftCheck, GradientIdentityCheck, MollifierCheck])
def test_spectral_checks_pass(sp8, check_cls):
    frame = check_cls(sp8).run_many([0, 1])
    assert not frame.empty
    assert frame["verdict"].all(), frame.loc[~frame["verdict"], ["params", "margin", "note"]]


def test_mollifier_reports_cover_every_contract(sp8):
    frame = MollifierCheck(sp8).run_many([0])
    notes = set(frame["note"])
    assert {"faixa (0,2)", "tipo forte (p,p)", "comutação", "Λ^s J_ε em L^p", "suavização ε^{-s/2}"} <= notes
