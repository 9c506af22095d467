from __future__ import annotations

import numpy as np
import pytest

from src.domain import build_spectrum
from src.ineqlab.base import make_test_field
from src.ineqlab.poincare import (
    PoincareCheck,
    PowerDomainCheck,
    poincare_constants,
    poincare_margin,
    poincare_terms,
    power_domain_case,
    power_domain_check,
)


def test_constants_table():
    lam1 = 2.0 * np.pi ** 2
    c1, c2, case = poincare_constants(2.0, 1.0, lam1)
    assert (c1, case) == (0.5, "exact") and c2 == pytest.approx(0.5 * lam1 ** 0.5)
    c1, c2, _ = poincare_constants(4.0, 0.5, lam1)
    assert c1 == 0.25 and c2 == pytest.approx(0.25 * lam1 ** 0.25)
    assert poincare_constants(3.0, 1.5, lam1) == (0.0, None, "case1")
    assert poincare_constants(2.5, 0.6, lam1) == (0.0, None, "case1")
    assert poincare_constants(2.5, 0.3, lam1)[::2] == (2.0 - 4.0 / 2.5, "case2")
    assert poincare_constants(3.0, 0.4, lam1)[::2] == (2.0 - 4.0 / 3.0, "case2")
    assert poincare_constants(6.0, 0.4, lam1)[::2] == (4.0 / 6.0, "case3")
    with pytest.raises(ValueError):
        poincare_constants(1.5, 1.0, lam1)
    with pytest.raises(ValueError):
        poincare_constants(2.0, 2.0, lam1)


@pytest.mark.parametrize("p", [2.0, 4.0])
@pytest.mark.parametrize("s", [0.5, 1.0, 1.5])
def test_explicit_cases_hold(sp16, p, s):
    q = make_test_field(sp16, "random-band-limited", seed=9).field
    report = poincare_margin(q, p, s)
    assert report.verdict
    assert report.rhs_terms["lp"] > 0


def test_lowest_mode_is_sharp_for_p_two(sp16):
    q = make_test_field(sp16, "single-mode").field
    terms = poincare_terms(q, 2.0, 1.0)
    # o campo |w_11| = w_11 satura a desigualdade
    assert terms.lhs == pytest.approx(terms.fractional_term, rel=1e-10)
    report = poincare_margin(q, 2.0, 1.0)
    assert abs(report.margin) <= 1e-10 * abs(report.lhs)


def test_other_exponents_report_empirical_constant(sp16):
    q = make_test_field(sp16, "random-band-limited", seed=4).field
    report = poincare_margin(q, 3.0, 0.4)
    assert report.empirical_constant == report.margin
    assert report.note == "case2"
    assert report.verdict


def test_power_domain_cases():
    assert power_domain_case(0.6, 0.3) == "i"
    assert power_domain_case(1.0, 1.0) == "ii"
    assert power_domain_case(1.5, 1.0) == "iii"
    assert power_domain_case(2.5, 2.0) == "iv"
    assert power_domain_case(0.6, 0.8) is None


def test_power_domain_refinement(unit_square):
    q = make_test_field(build_spectrum(unit_square, 8), "random-band-limited", seed=1, band=4).field
    report = power_domain_check(q, 2.0, 2.0, levels=3)
    assert report.resolutions == [8, 16, 32]
    assert report.bounded(1.1)
    with pytest.raises(ValueError):
        power_domain_check(q, 0.0, 1.0)


def test_checks_pass(sp16):
    df = PoincareCheck(sp16, {"poincare": 1e-8}).run_many([0, 1])
    assert df["verdict"].all(), df.loc[~df["verdict"]]
    growth = PowerDomainCheck(sp16, {"power_growth": 1.1}).run_many([0])
    assert set(growth["kind"]) == {"ratio"}
    assert growth["verdict"].all(), growth.loc[~growth["verdict"]]
