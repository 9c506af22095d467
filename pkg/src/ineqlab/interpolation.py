from __future__ import annotations
from typing import List

from src.domain import SpectralField, sobolev_norm
from src.ineqlab.base import BaseCheck, MarginReport, make_test_field, margin_verdict


def interpolation_theta(s1: float, s: float, s2: float) -> float:
    if s1 == s2:
        if s != s1:
            raise ValueError(f"s1 = s2 exige s = s1 (s1={s1}, s={s}, s2={s2})")
        return 1.0
    if not s1 <= s <= s2:
        raise ValueError(f"s1 ≤ s ≤ s2 exigido (s1={s1}, s={s}, s2={s2})")
    return (s2 - s) / (s2 - s1)


def interpolation_check(f: SpectralField, s1: float, s: float, s2: float, tol: float = 1e-13, seed: int = 0) -> MarginReport:
    """||Λ^s f|| ≤ ||Λ^{s1} f||^θ ||Λ^{s2} f||^{1-θ}, s = θ s1 + (1-θ) s2 (Hölder no espectro)."""
    theta = interpolation_theta(s1, s, s2)
    lhs = sobolev_norm(f, s)
    rhs = sobolev_norm(f, s1) ** theta * sobolev_norm(f, s2) ** (1.0 - theta)
    margin = rhs - lhs
    scaled = tol * max(rhs, lhs)
    return MarginReport(
        "interpolation",
        {"s1": s1, "s": s, "s2": s2, "theta": theta},
        lhs,
        rhs,
        margin,
        margin_verdict(margin, scaled),
        scaled,
        resolution=f.spectrum.nx,
        seed=seed,
    )


class InterpolationCheck(BaseCheck):
    check_id = "interpolation"
    triples = ((0.0, 1.0, 2.0), (0.0, 0.5, 1.0), (0.5, 0.75, 1.5), (-0.5, 0.5, 1.0), (1.0, 1.0, 2.0))

    def run_one(self, seed: int) -> List[MarginReport]:
        tol = self.tolerances.get("interpolation", 1e-13)
        f = make_test_field(self.spectrum, "random-band-limited", seed=seed, band=self.spectrum.nx).field
        return [interpolation_check(f, *triple, tol=tol, seed=seed) for triple in self.triples]
