from __future__ import annotations
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from src.domain import (
    PhysicalField,
    SpectralField,
    analyze,
    build_spectrum,
    integrate,
    inverse_transform,
    project_nodal,
    sobolev_norm,
    synthesize,
)
from src.fracops import apply_fractional
from src.ineqlab.base import BaseCheck, MarginReport, make_test_field, margin_verdict

logger = logging.getLogger(__name__)


def poincare_constants(p: float, s: float, lambda1: float) -> Tuple[float, Optional[float], str]:
    """(c1, c2, caso) da tabela da desigualdade de Poincaré não linear.

    c2 só é explícito para p ∈ {2, 4}; nos demais casos depende de uma constante
    C_{Ω,s} não especificada e é devolvido como None.
    """
    if p < 2:
        raise ValueError(f"p ≥ 2 exigido (p={p})")
    if not 0.0 < s < 2.0:
        raise ValueError(f"s ∈ (0,2) exigido (s={s})")
    if p in (2.0, 4.0):
        return 1.0 / p, lambda1 ** (0.5 * s) / p, "exact"
    if (2 < p < 4 and s > 1) or (2 < p < 3 and p - 2 <= s <= 1):
        return 0.0, None, "case1"
    if (2 < p < 3 and s < p - 2) or (3 <= p < 4 and s <= 1):
        return 2.0 - 4.0 / p, None, "case2"
    return 4.0 / p, None, "case3"


@dataclass
class PoincareTerms:
    lhs: float
    fractional_term: float   # ||Λ^{s/2}(|q|^{p/2})||²
    lp_term: float           # ||q||_Lp^p


def poincare_terms(q: SpectralField, p: float, s: float, symbol: str = "exact") -> PoincareTerms:
    sp = q.spectrum
    qn = inverse_transform(q).values
    lam_q = synthesize(apply_fractional(s, q, symbol).coeffs, sp)
    lhs = integrate(PhysicalField(sp, qn * np.abs(qn) ** (p - 2.0) * lam_q))
    g = analyze(np.abs(qn) ** (0.5 * p), sp)
    frac = float(np.sum(sp.symbol(symbol) ** (0.5 * s) * g ** 2))
    lp = integrate(PhysicalField(sp, np.abs(qn) ** p))
    return PoincareTerms(lhs, frac, lp)


def poincare_margin(
    q: SpectralField,
    p: float,
    s: float,
    symbol: str = "exact",
    tol: float = 1e-8,
    seed: int = 0,
) -> MarginReport:
    """Margem da desigualdade ∫ q|q|^{p-2} Λ^s q ≥ c1 ||Λ^{s/2}|q|^{p/2}||² + c2 ||q||_p^p.

    λ1 é o do símbolo usado, de modo que os casos p ∈ {2, 4} são exatos também
    na realização discreta.
    """
    sp = q.spectrum
    c1, c2, case = poincare_constants(p, s, sp.lambda1_of(symbol))
    terms = poincare_terms(q, p, s, symbol)
    params = {"p": p, "s": s}
    rhs_terms = {"fractional": terms.fractional_term, "lp": terms.lp_term}
    if c2 is not None:
        rhs = c1 * terms.fractional_term + c2 * terms.lp_term
        margin = terms.lhs - rhs
        scale_tol = tol * (abs(terms.lhs) + abs(rhs))
        return MarginReport("poincare", params, terms.lhs, rhs, margin, margin_verdict(margin, scale_tol),
                            scale_tol, rhs_terms=rhs_terms, resolution=sp.nx, seed=seed, note=case)
    if terms.lp_term <= 0:
        raise ValueError("campo nulo: c2* indefinido")
    c2_star = (terms.lhs - c1 * terms.fractional_term) / terms.lp_term
    return MarginReport("poincare", params, terms.lhs, c1 * terms.fractional_term, c2_star, bool(c2_star > 0),
                        0.0, rhs_terms=rhs_terms, empirical_constant=c2_star, resolution=sp.nx, seed=seed, note=case)


# ---------------------------------------------------------------------------
# |q|^β em D(Λ^s)

def power_domain_case(beta: float, s: float) -> Optional[str]:
    if 0 < beta < 1 and 0 < s < beta:
        return "i"
    if beta == 1 and s == 1:
        return "ii"
    if 1 < beta < 2 and s == 1:
        return "iii"
    if beta >= 2 and s == 2:
        return "iv"
    return None


@dataclass
class RefinementReport:
    beta: float
    s: float
    case: Optional[str]
    resolutions: List[int] = field(default_factory=list)
    norms: List[float] = field(default_factory=list)

    @property
    def growth(self) -> List[float]:
        return [b / a for a, b in zip(self.norms[:-1], self.norms[1:])]

    @property
    def in_case(self) -> bool:
        return self.case is not None

    def bounded(self, limit: float = 1.1) -> bool:
        return bool(self.growth[-1] <= limit)


def power_domain_check(q: SpectralField, beta: float, s: float, levels: int = 3) -> RefinementReport:
    """||Λ^s(|q|^β)|| nas resoluções N, 2N, 4N (símbolo exato)."""
    if beta <= 0:
        raise ValueError(f"β > 0 exigido (β={beta})")
    if not 0.0 < s <= 2.0:
        raise ValueError(f"s ∈ (0,2] exigido (s={s})")
    report = RefinementReport(beta, s, power_domain_case(beta, s))
    base = q.spectrum
    for level in range(levels):
        factor = 2 ** level
        sp = build_spectrum(base.domain, base.nx * factor, base.ny * factor)
        qn = inverse_transform(q.resample(sp)).values
        g = project_nodal(sp, np.abs(qn) ** beta)
        report.resolutions.append(sp.nx)
        report.norms.append(sobolev_norm(g, s))
    if not report.in_case:
        logger.warning("(β=%g, s=%g) fora dos casos cobertos: crescimento observado %s", beta, s, report.growth)
    return report


class PoincareCheck(BaseCheck):
    check_id = "poincare"
    # (p, s): p ∈ {2, 4} com constantes explícitas; demais com c2* empírico
    grid = (
        [(2.0, s) for s in (0.5, 1.0, 1.5)]
        + [(4.0, s) for s in (0.5, 1.0, 1.5)]
        + [(3.0, 0.4), (3.0, 1.5), (5.0, 0.4), (6.0, 0.4)]
    )

    def run_one(self, seed: int) -> List[MarginReport]:
        tol = self.tolerances.get("poincare", 1e-8)
        q = make_test_field(self.spectrum, "random-band-limited", seed=seed).field
        return [poincare_margin(q, p, s, tol=tol, seed=seed) for p, s in self.grid]


class PowerDomainCheck(BaseCheck):
    check_id = "power_domain"
    seeded = False
    cases = ((0.6, 0.3), (1.0, 1.0), (1.5, 1.0), (2.0, 2.0))

    def run_one(self, seed: int) -> List[MarginReport]:
        limit = self.tolerances.get("power_growth", 1.1)
        base = build_spectrum(self.spectrum.domain, 16)
        q = make_test_field(base, "random-band-limited", seed=seed, band=6).field
        reports = []
        for beta, s in self.cases:
            rep = power_domain_check(q, beta, s)
            growth = rep.growth[-1]
            reports.append(MarginReport(
                check_id=self.check_id,
                params={"beta": beta, "s": s},
                lhs=rep.norms[-1],
                rhs=rep.norms[-2],
                margin=growth,
                verdict=rep.bounded(limit) if rep.in_case else True,
                tol=limit,
                kind="ratio",
                resolution=rep.resolutions[-1],
                seed=seed,
                note=f"caso {rep.case}" if rep.in_case else "fora dos casos",
            ))
        return reports
