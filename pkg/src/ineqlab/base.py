from __future__ import annotations
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.domain import PhysicalField, SpectralField, Spectrum, forward_transform
from src.schemas import MARGIN_COLUMNS

FIELD_TAGS = ("single-mode", "random-band-limited", "bump", "signed-bump")


@dataclass(frozen=True, eq=False)
class TestField:
    """Campo de teste reproduzível a partir de (tag, seed, band)."""

    __test__ = False  # não é uma classe de teste do pytest

    tag: str
    seed: int
    band: int
    field: SpectralField

    @property
    def spectrum(self) -> Spectrum:
        return self.field.spectrum


def _bump(x: np.ndarray, y: np.ndarray, cx: float, cy: float, radius: float) -> np.ndarray:
    rho2 = ((x - cx) ** 2 + (y - cy) ** 2) / radius ** 2
    out = np.zeros_like(x)
    inside = rho2 < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - rho2[inside]))
    return out


def make_test_field(
    spectrum: Spectrum,
    tag: str,
    seed: int = 0,
    band: int = 8,
    mode: Tuple[int, int] = (1, 1),
) -> TestField:
    if tag not in FIELD_TAGS:
        raise ValueError(f"gerador desconhecido: {tag} (use um de {FIELD_TAGS})")
    rng = np.random.default_rng(seed)
    if tag == "single-mode":
        return TestField(tag, seed, band, SpectralField.mode(spectrum, *mode))
    if tag == "random-band-limited":
        jb, kb = min(band, spectrum.nx), min(band, spectrum.ny)
        c = np.zeros(spectrum.shape)
        jj = np.arange(1, jb + 1)[:, None]
        kk = np.arange(1, kb + 1)[None, :]
        c[:jb, :kb] = rng.standard_normal((jb, kb)) / (jj ** 2 + kk ** 2)
        return TestField(tag, seed, band, SpectralField(spectrum, c))

    lx, ly = spectrum.domain.lx, spectrum.domain.ly
    x, y = np.meshgrid(spectrum.x_nodes, spectrum.y_nodes, indexing="ij")
    radius = rng.uniform(0.2, 0.35) * min(lx, ly)
    cx = rng.uniform(radius, lx - radius)
    cy = rng.uniform(radius, ly - radius)
    values = _bump(x, y, cx, cy, radius)
    if tag == "signed-bump":
        r2 = rng.uniform(0.2, 0.35) * min(lx, ly)
        values = values - _bump(x, y, rng.uniform(r2, lx - r2), rng.uniform(r2, ly - r2), r2)
    # o bump é projetado e mantido só até a banda pedida
    h = forward_transform(PhysicalField(spectrum, values)).truncate(band)
    return TestField(tag, seed, band, h)


@dataclass
class MarginReport:
    check_id: str
    params: Dict[str, float]
    lhs: float
    rhs: float
    margin: float
    verdict: bool
    tol: float
    kind: str = "margin"  # "margin" (LHS - RHS) ou "ratio" (LHS / RHS)
    rhs_terms: Dict[str, float] = field(default_factory=dict)
    empirical_constant: Optional[float] = None
    resolution: int = 0
    seed: int = 0
    note: str = ""

    def to_row(self) -> Dict[str, object]:
        row = asdict(self)
        row["params"] = ";".join(f"{k}={v:g}" for k, v in sorted(self.params.items()))
        row["rhs_terms"] = ";".join(f"{k}={v:.17g}" for k, v in sorted(self.rhs_terms.items()))
        return {c: row[c] for c in MARGIN_COLUMNS}


def margin_verdict(margin: float, tol: float) -> bool:
    return bool(margin >= -tol)


class BaseCheck(ABC):
    check_id: str
    # verificações sem dependência de semente rodam uma única vez por suíte
    seeded: bool = True

    def __init__(self, spectrum: Spectrum, tolerances: Optional[Dict[str, float]] = None):
        self.spectrum = spectrum
        self.tolerances = dict(tolerances or {})

    @abstractmethod
    def run_one(self, seed: int) -> List[MarginReport]:
        """Executa a verificação para uma semente e devolve um relatório por parâmetro."""
        raise NotImplementedError

    def validate_reports(self, reports: List[MarginReport]) -> List[MarginReport]:
        for r in reports:
            if not np.isfinite(r.margin):
                raise ValueError(f"Margem não finita na verificação {self.check_id}: {r.params}")
        return reports

    def run_many(self, seeds: Iterable[int]) -> pd.DataFrame:
        seeds = list(seeds)
        if not self.seeded:
            seeds = seeds[:1]
        rows = []
        for seed in seeds:
            rows.extend(r.to_row() for r in self.validate_reports(self.run_one(seed)))
        if rows:
            return pd.DataFrame(rows, columns=MARGIN_COLUMNS)
        return pd.DataFrame(columns=MARGIN_COLUMNS)
