from __future__ import annotations

import numpy as np
import pytest

from src.domain import RectDomain, build_spectrum
from src.ineqlab.base import make_test_field


@pytest.fixture
def unit_square():
    return RectDomain(1.0, 1.0)


@pytest.fixture
def rect():
    return RectDomain(1.0, 0.7)


@pytest.fixture
def sp8(unit_square):
    return build_spectrum(unit_square, 8)


@pytest.fixture
def sp16(unit_square):
    return build_spectrum(unit_square, 16)


@pytest.fixture
def sp_rect(rect):
    return build_spectrum(rect, 12, 10)


@pytest.fixture
def band_field(sp16):
    return make_test_field(sp16, "random-band-limited", seed=3, band=6).field


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
