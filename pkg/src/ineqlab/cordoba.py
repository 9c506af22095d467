from __future__ import annotations
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from src.domain import (
    PhysicalField,
    SpectralField,
    Spectrum,
    build_spectrum,
    gradient,
    integrate,
    inverse_transform,
    lp_norm,
    project_nodal,
    synthesize,
)
from src.fracops import apply_fractional
from src.ineqlab.base import BaseCheck, MarginReport, make_test_field, margin_verdict

Convex = Tuple[Callable[[np.ndarray], np.ndarray], Callable[[np.ndarray], np.ndarray]]


def convex_function(name: str, p: Optional[float] = None) -> Convex:
    """Catálogo de Φ convexas C¹ com Φ(0) = 0: (Φ, Φ')."""
    if name == "square":
        return (lambda x: x * x, lambda x: 2.0 * x)
    if name == "power":
        if p is None or p < 2:
            raise ValueError(f"Φ = |x|^p exige p ≥ 2 (p={p})")
        return (lambda x: np.abs(x) ** p, lambda x: p * np.abs(x) ** (p - 2.0) * x)
    if name == "positive-square":
        return (lambda x: np.maximum(x, 0.0) ** 2, lambda x: 2.0 * np.maximum(x, 0.0))
    raise ValueError(f"Φ fora do catálogo: {name}")


def _check_order(s: float) -> None:
    if not 0.0 < s <= 2.0:
        raise ValueError(f"s ∈ (0,2] exigido (s={s})")


def cordoba_defect(q: SpectralField, s: float, phi: str = "square", p: Optional[float] = None, symbol: str = "exact") -> PhysicalField:
    """D = Φ'(q) Λ^s q - Λ^s Φ(q) nos nós da malha.

    Com o símbolo "grid" as potências fracionárias são as do Laplaciano de 5 pontos,
    e D ≥ 0 vale exatamente (a menos de arredondamento) sempre que qΦ'(q) - Φ(q) ≥ 0.
    Com o símbolo exato a margem inclui o erro de reprojeção de Φ(q).
    """
    _check_order(s)
    func, deriv = convex_function(phi, p)
    sp = q.spectrum
    qn = inverse_transform(q).values
    lam_q = synthesize(apply_fractional(s, q, symbol).coeffs, sp)
    phi_q = project_nodal(sp, func(qn))
    lam_phi = synthesize(apply_fractional(s, phi_q, symbol).coeffs, sp)
    return PhysicalField(sp, deriv(qn) * lam_q - lam_phi)


def empirical_cordoba_constant(q: SpectralField, s: float, defect: PhysicalField, phi: str = "square", p: Optional[float] = None) -> float:
    """Menor c com D ≥ c d(x)^{-s} (qΦ'(q) - Φ(q)) nos nós onde o lado direito não é desprezível."""
    func, deriv = convex_function(phi, p)
    sp = q.spectrum
    qn = inverse_transform(q).values
    gap = qn * deriv(qn) - func(qn)
    x, y = np.meshgrid(sp.x_nodes, sp.y_nodes, indexing="ij")
    d = sp.domain.boundary_distance(x, y)
    mask = (d > 0) & (gap > 1e-6 * max(float(np.max(gap)), 1e-300))
    if not np.any(mask):
        return float("nan")
    return float(np.min(defect.values[mask] * d[mask] ** s / gap[mask]))


def integral_nonnegativity(f: PhysicalField, s: float, symbol: str = "exact") -> float:
    """∫_Ω Λ^s f dx para f ≥ 0."""
    _check_order(s)
    if np.any(f.values < 0):
        raise ValueError("campo de entrada com valores negativos")
    lam_f = apply_fractional(s, project_nodal(f.spectrum, f.values), symbol)
    return integrate(inverse_transform(lam_f))


def leibniz_identity_gap(q: SpectralField) -> float:
    """max |D - 2|∇q|²| para Φ = x², s = 2 e símbolo exato, relativo a max 2|∇q|²."""
    defect = cordoba_defect(q, 2.0, "square", symbol="exact")
    g = gradient(q)
    target = 2.0 * (g.x ** 2 + g.y ** 2)
    scale = max(float(np.max(np.abs(target))), 1e-300)
    return float(np.max(np.abs(defect.values - target)) / scale)


def smooth_power_field(spectrum: Spectrum, power: int = 5) -> SpectralField:
    """sin^m(πx/Lx) sin^m(πy/Ly) com m ímpar: limitado em banda na base de senos."""
    lx, ly = spectrum.domain.lx, spectrum.domain.ly
    x, y = np.meshgrid(spectrum.x_nodes, spectrum.y_nodes, indexing="ij")
    values = np.sin(np.pi * x / lx) ** power * np.sin(np.pi * y / ly) ** power
    return project_nodal(spectrum, values)


class CordobaCheck(BaseCheck):
    check_id = "cordoba"
    orders = (0.5, 1.0, 1.5)
    catalogue = (("square", None), ("power", 4.0), ("positive-square", None))

    def run_one(self, seed: int) -> List[MarginReport]:
        tol = self.tolerances.get("cordoba", 1e-6)
        q = make_test_field(self.spectrum, "random-band-limited", seed=seed).field
        scale = lp_norm(inverse_transform(q), np.inf) ** 2
        reports = []
        for s in self.orders:
            for phi, p in self.catalogue:
                defect = cordoba_defect(q, s, phi, p)
                worst = float(np.min(defect.values)) / scale
                grid = float(np.min(cordoba_defect(q, s, phi, p, symbol="grid").values)) / scale
                reports.append(MarginReport(
                    check_id=self.check_id,
                    params={"s": s, "p": p or 2.0},
                    lhs=float(np.min(defect.values)),
                    rhs=0.0,
                    margin=worst,
                    verdict=margin_verdict(worst, tol),
                    tol=tol,
                    rhs_terms={"grid_margin": grid},
                    empirical_constant=empirical_cordoba_constant(q, s, defect, phi, p),
                    resolution=self.spectrum.nx,
                    seed=seed,
                    note=phi,
                ))
        return reports


class CordobaIdentityCheck(BaseCheck):
    check_id = "cordoba_identity"
    seeded = False

    def run_one(self, seed: int) -> List[MarginReport]:
        tol = self.tolerances.get("cordoba_identity", 1e-8)
        # o resto da série de q² decai como j^{-11}; 128 modos deixam o erro abaixo de 1e-10
        sp = build_spectrum(self.spectrum.domain, 128)
        gap = leibniz_identity_gap(smooth_power_field(sp))
        return [MarginReport(
            check_id=self.check_id,
            params={"s": 2.0},
            lhs=gap,
            rhs=0.0,
            margin=-gap,
            verdict=margin_verdict(-gap, tol),
            tol=tol,
            resolution=sp.nx,
            seed=seed,
        )]


class NonnegativityCheck(BaseCheck):
    check_id = "nonnegativity"
    orders = (0.5, 1.0, 1.5)

    def run_one(self, seed: int) -> List[MarginReport]:
        tol = self.tolerances.get("nonnegativity", 1e-8)
        sp = self.spectrum
        bump = inverse_transform(make_test_field(sp, "bump", seed=seed, band=sp.nx).field).values
        q = inverse_transform(make_test_field(sp, "random-band-limited", seed=seed).field).values
        fields: Dict[str, np.ndarray] = {"bump2": bump ** 2, "abs": np.abs(q)}
        reports = []
        for name, values in fields.items():
            f = PhysicalField(sp, values)
            scale = max(integrate(f), 1e-300)
            for s in self.orders:
                value = integral_nonnegativity(f, s)
                grid = integral_nonnegativity(f, s, symbol="grid") / scale
                reports.append(MarginReport(
                    check_id=self.check_id,
                    params={"s": s},
                    lhs=value,
                    rhs=0.0,
                    margin=value / scale,
                    verdict=margin_verdict(value / scale, tol),
                    tol=tol,
                    rhs_terms={"grid_margin": grid},
                    resolution=sp.nx,
                    seed=seed,
                    note=name,
                ))
        return reports
