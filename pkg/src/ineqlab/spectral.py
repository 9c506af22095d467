from __future__ import annotations
import logging
from typing import List

import numpy as np
from scipy.integrate import trapezoid

from src.domain import (
    SpectralField,
    build_spectrum,
    cell_centered_points,
    gradient,
    inverse_transform,
    lp_norm,
    sobolev_norm,
)
from src.fracops import (
    apply_fractional,
    kernel_assemble,
    kernel_quadratic_form,
    mollifier_multiplier,
    mollifier_smoothing_bound,
    mollify,
)
from src.ineqlab.base import BaseCheck, MarginReport, make_test_field, margin_verdict

logger = logging.getLogger(__name__)


def adjoint_shift_gap(f: SpectralField, g: SpectralField, a: float, b: float, s: float) -> float:
    """|(Λ^a f, Λ^b g) - (Λ^{a-s} f, Λ^{b+s} g)| relativo à soma dos módulos."""
    left = apply_fractional(a, f).coeffs * apply_fractional(b, g).coeffs
    right = apply_fractional(a - s, f).coeffs * apply_fractional(b + s, g).coeffs
    scale = max(float(np.sum(np.abs(left))), 1e-300)
    return abs(float(np.sum(left)) - float(np.sum(right))) / scale


def gradient_identity_gap(h: SpectralField, g: SpectralField, a: float, b: float) -> float:
    """|(∇Λ^a h, ∇Λ^b g) - (Λ^{a+1} h, Λ^{b+1} g)| com o lado esquerdo por trapézio."""
    sp = h.spectrum
    gh = gradient(apply_fractional(a, h))
    gg = gradient(apply_fractional(b, g))
    dot = gh.x * gg.x + gh.y * gg.y
    lhs = float(trapezoid(trapezoid(dot, dx=sp.hy, axis=1), dx=sp.hx, axis=0))
    terms = apply_fractional(a + 1.0, h).coeffs * apply_fractional(b + 1.0, g).coeffs
    scale = max(float(np.sum(np.abs(terms))), 1e-300)
    return abs(lhs - float(np.sum(terms))) / scale


class AdjointShiftCheck(BaseCheck):
    check_id = "adjoint_shift"
    shifts = ((0.5, 0.5, 0.25), (1.0, -0.5, 0.7), (1.5, 0.0, 1.5), (-0.5, 1.0, -0.3))

    def run_one(self, seed: int) -> List[MarginReport]:
        tol = self.tolerances.get("adjoint_shift", 1e-13)
        sp = self.spectrum
        f = make_test_field(sp, "random-band-limited", seed=seed, band=sp.nx).field
        g = make_test_field(sp, "random-band-limited", seed=seed + 1, band=sp.nx).field
        reports = []
        for a, b, s in self.shifts:
            gap = adjoint_shift_gap(f, g, a, b, s)
            reports.append(MarginReport(self.check_id, {"a": a, "b": b, "s": s}, gap, 0.0, -gap,
                                        margin_verdict(-gap, tol), tol, resolution=sp.nx, seed=seed))
        return reports


class GradientIdentityCheck(BaseCheck):
    check_id = "gradient_identity"
    orders = ((0.0, 0.0), (0.5, -0.5), (-0.25, 0.75))

    def run_one(self, seed: int) -> List[MarginReport]:
        tol = self.tolerances.get("gradient_identity", 1e-8)
        sp = self.spectrum
        h = make_test_field(sp, "random-band-limited", seed=seed).field
        g = make_test_field(sp, "random-band-limited", seed=seed + 1).field
        reports = []
        for a, b in self.orders:
            gap = gradient_identity_gap(h, g, a, b)
            reports.append(MarginReport(self.check_id, {"a": a, "b": b}, gap, 0.0, -gap,
                                        margin_verdict(-gap, tol), tol, resolution=sp.nx, seed=seed))
        return reports


class MollifierCheck(BaseCheck):
    """Contrato do regularizador J_ε: faixa do multiplicador, tipo forte (p,p),
    comutação com Λ^s, estimativa de suavização e a razão em L^p de Λ^s J_ε."""

    check_id = "mollifier"
    eps_values = (0.3, 0.1, 0.03)
    exponents = (1.0, 2.0, 4.0, np.inf)
    orders = (0.5, 1.0, 1.5)

    def _range_report(self, seed: int) -> MarginReport:
        eps_grid = np.geomspace(1e-3, 0.5, 40)
        lam_grid = np.geomspace(1.0, 1e3, 40)
        lo, hi = np.inf, -np.inf
        for eps in eps_grid:
            m = mollifier_multiplier(eps, lam_grid)
            lo, hi = min(lo, float(m.min())), max(hi, float(m.max()))
        inside = lo > 0.0 and hi < 2.0
        return MarginReport(self.check_id, {"eps_min": 1e-3, "eps_max": 0.5}, hi, 2.0, 2.0 - hi, inside, 0.0,
                            rhs_terms={"min": lo}, resolution=self.spectrum.nx, seed=seed, note="faixa (0,2)")

    def run_one(self, seed: int) -> List[MarginReport]:
        bound = self.tolerances.get("strong_type", 2.05)
        comm_tol = self.tolerances.get("commutation", 1e-13)
        sp = self.spectrum
        f = make_test_field(sp, "random-band-limited", seed=seed).field
        fn = inverse_transform(f)
        reports = [self._range_report(seed)]
        for eps in self.eps_values:
            jf = mollify(eps, f)
            jfn = inverse_transform(jf)
            for p in self.exponents:
                ratio = lp_norm(jfn, p) / lp_norm(fn, p)
                reports.append(MarginReport(self.check_id, {"eps": eps, "p": p}, ratio, bound, ratio,
                                            bool(ratio <= bound), bound, kind="ratio", resolution=sp.nx,
                                            seed=seed, note="tipo forte (p,p)"))
            for s in self.orders:
                a = apply_fractional(s, jf).coeffs
                b = mollify(eps, apply_fractional(s, f)).coeffs
                gap = float(np.max(np.abs(a - b))) / max(float(np.max(np.abs(a))), 1e-300)
                reports.append(MarginReport(self.check_id, {"eps": eps, "s": s}, gap, 0.0, -gap,
                                            margin_verdict(-gap, comm_tol), comm_tol, resolution=sp.nx,
                                            seed=seed, note="comutação"))
                for p in (2.0, 4.0):
                    lam_jf = lp_norm(inverse_transform(apply_fractional(s, jf)), p)
                    lam_f = lp_norm(inverse_transform(apply_fractional(s, f)), p)
                    ratio = lam_jf / lam_f
                    reports.append(MarginReport(self.check_id, {"eps": eps, "s": s, "p": p}, lam_jf, lam_f,
                                                ratio, bool(np.isfinite(ratio)), 0.0, kind="ratio",
                                                empirical_constant=ratio, resolution=sp.nx, seed=seed,
                                                note="Λ^s J_ε em L^p"))
        for s in self.orders:
            c = mollifier_smoothing_bound(s, self.eps_values, np.unique(sp.eigenvalues))
            reports.append(MarginReport(self.check_id, {"s": s}, c, 0.0, c, bool(np.isfinite(c)), 0.0,
                                        kind="ratio", empirical_constant=c, resolution=sp.nx, seed=seed,
                                        note="suavização ε^{-s/2}"))
        return reports


class KernelCheck(BaseCheck):
    """Representação ||Λ^s ψ||² = ∫∫(ψ(x)-ψ(y))² K_s + ∫ψ² B_s numa amostragem grossa."""

    check_id = "kernel"
    seeded = False
    orders = (0.25,)
    n_side = 16

    def run_one(self, seed: int) -> List[MarginReport]:
        tol = self.tolerances.get("kernel_representation", 0.02)
        domain = self.spectrum.domain
        sp = build_spectrum(domain, 4)
        psi = SpectralField.mode(sp, 1, 1)
        points, weights = cell_centered_points(domain, self.n_side)
        reports = []
        for s in self.orders:
            table = kernel_assemble(s, domain, points, weights)
            exact = sobolev_norm(psi, s) ** 2
            approx = kernel_quadratic_form(table, psi)
            rel = abs(approx - exact) / exact
            nonneg = bool(np.all(table.k_values >= 0) and np.all(table.b_values >= 0))
            reports.append(MarginReport(
                check_id=self.check_id,
                params={"s": s},
                lhs=approx,
                rhs=exact,
                margin=-rel,
                verdict=bool(margin_verdict(-rel, tol) and nonneg),
                tol=tol,
                empirical_constant=table.decay_constant,
                resolution=self.n_side,
                seed=seed,
                note="K_s, B_s ≥ 0" if nonneg else "núcleo negativo",
            ))
        return reports
