from __future__ import annotations
import logging
from typing import List, Optional, Tuple

import numpy as np

from src.domain import (
    SpectralField,
    Spectrum,
    build_spectrum,
    evaluate_at,
    gradient,
    inverse_transform,
    lp_norm,
    project_nodal,
    sobolev_norm,
)
from src.fracops import riesz_perp, velocity_h1_norm
from src.ineqlab.base import BaseCheck, MarginReport, make_test_field

logger = logging.getLogger(__name__)

PRODUCT_VARIANTS = (1, 2, 3)
QUAD_SIDE = 33
_CHUNK = 256


def _node_samples(v: SpectralField, n_side: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float, float]:
    """Valores de v numa malha uniforme n_side x n_side (bordas incluídas) e pesos do trapézio."""
    lx, ly = v.spectrum.domain.lx, v.spectrum.domain.ly
    xs = np.linspace(0.0, lx, n_side)
    ys = np.linspace(0.0, ly, n_side)
    x, y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([x.ravel(), y.ravel()], axis=1)
    wx = np.full(n_side, lx / (n_side - 1))
    wy = np.full(n_side, ly / (n_side - 1))
    wx[[0, -1]] *= 0.5
    wy[[0, -1]] *= 0.5
    weights = np.outer(wx, wy).ravel()
    return pts, evaluate_at(v, pts), weights, lx / (n_side - 1), ly / (n_side - 1)


def gagliardo_norm(v: SpectralField, sigma: float, p: float, n_side: int = QUAD_SIDE) -> float:
    """||v||_{W^{σ,p}} = (||v||_p^p + ∫∫ |v(x)-v(y)|^p / |x-y|^{2+σp})^{1/p}.

    Dupla quadratura do trapézio numa malha grossa, sem a diagonal x = y.
    """
    if not 0.0 < sigma < 1.0:
        raise ValueError(f"σ ∈ (0,1) exigido (σ={sigma})")
    if p < 1:
        raise ValueError(f"p ≥ 1 exigido (p={p})")
    pts, vals, w, _, _ = _node_samples(v, n_side)
    lp = float(np.sum(w * np.abs(vals) ** p))
    semi = 0.0
    for start in range(0, len(pts), _CHUNK):
        sl = slice(start, start + _CHUNK)
        diff = pts[sl, None, :] - pts[None, :, :]
        r = np.sqrt(np.sum(diff ** 2, axis=-1))
        mask = r > 0
        ratio = np.zeros_like(r)
        ratio[mask] = np.abs(vals[sl, None] - vals[None, :])[mask] ** p / r[mask] ** (2.0 + sigma * p)
        semi += float(np.sum(w[sl, None] * w[None, :] * ratio))
    return (lp + semi) ** (1.0 / p)


def holder_seminorm(g: SpectralField, gamma: float, n_side: int = QUAD_SIDE, min_cells: int = 2) -> float:
    """[g]_{C^{0,γ}} = max |g(x)-g(y)| / |x-y|^γ sobre pares a pelo menos min_cells células."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"γ ∈ (0,1] exigido (γ={gamma})")
    pts, vals, _, hx, hy = _node_samples(g, n_side)
    r_min = min_cells * max(hx, hy)
    worst = 0.0
    for start in range(0, len(pts), _CHUNK):
        sl = slice(start, start + _CHUNK)
        diff = pts[sl, None, :] - pts[None, :, :]
        r = np.sqrt(np.sum(diff ** 2, axis=-1))
        mask = r >= r_min
        if np.any(mask):
            q = np.abs(vals[sl, None] - vals[None, :])[mask] / r[mask] ** gamma
            worst = max(worst, float(np.max(q)))
    return worst


def _product_terms(g: SpectralField, h: SpectralField, beta: float) -> Tuple[float, float, float]:
    gn = inverse_transform(g).values
    hn = inverse_transform(h).values
    lhs = sobolev_norm(project_nodal(g.spectrum, gn * hn), beta)
    return lhs, float(np.max(np.abs(gn))), float(np.max(np.abs(hn)))


def default_exponent(beta: float) -> float:
    return 2.0 / (1.0 - beta)


def product_ratio(
    g: SpectralField,
    h: SpectralField,
    beta: float,
    variant: int = 2,
    k: Optional[float] = None,
    gamma: Optional[float] = None,
    seed: int = 0,
) -> MarginReport:
    """Razão ||Λ^β(gh)|| / RHS (C = 1) para as três formas da estimativa de produto."""
    if not 0.0 < beta < 1.0:
        raise ValueError(f"β ∈ (0,1) exigido (β={beta})")
    if variant not in PRODUCT_VARIANTS:
        raise ValueError(f"variante desconhecida: {variant}")
    if g.spectrum != h.spectrum:
        raise ValueError("g e h em espectros diferentes")
    sp = g.spectrum
    lhs, g_inf, h_inf = _product_terms(g, h, beta)
    params = {"beta": beta, "variant": float(variant)}

    if variant == 1:
        if beta == 0.5:
            raise ValueError("β = 1/2 excluído na variante 1")
        k = default_exponent(beta) if k is None else float(k)
        if k <= 1.0 / (1.0 - beta):
            raise ValueError(f"k > 1/(1-β) exigido (k={k})")
        sigma = 1.0 / k + beta
        expo = 2.0 * k / (k - 1.0)
        gn, hn = inverse_transform(g), inverse_transform(h)
        t1 = gagliardo_norm(g, sigma, expo) * lp_norm(hn, 2.0 * k)
        t2 = lp_norm(gn, 2.0 * k) * gagliardo_norm(h, sigma, expo)
        terms = {"g_w_h_l": t1, "g_l_h_w": t2}
        params["k"] = k
    elif variant == 2:
        t1 = g_inf * sobolev_norm(h, beta)
        t2 = h_inf * gagliardo_norm(g, beta, 2.0)
        terms = {"g_inf_h_beta": t1, "h_inf_g_hbeta": t2}
    else:
        gamma = 0.5 * (beta + 1.0) if gamma is None else float(gamma)
        t1 = g_inf * sobolev_norm(h, beta)
        t2 = sobolev_norm(h, 0.0) * holder_seminorm(g, gamma)
        terms = {"g_inf_h_beta": t1, "h_l2_g_holder": t2}
        params["gamma"] = gamma

    rhs = sum(terms.values())
    ratio = 0.0 if lhs == 0.0 else lhs / rhs
    return MarginReport(f"product_v{variant}", params, lhs, rhs, ratio, bool(np.isfinite(ratio)), 0.0,
                        kind="ratio", rhs_terms=terms, empirical_constant=ratio, resolution=sp.nx, seed=seed)


def trilinear_ratio(q1: SpectralField, v: SpectralField, w: SpectralField, alpha: float, eps0: float, seed: int = 0) -> MarginReport:
    """|(Λ^{1-α/2}(u·∇v), Λ^{1+α/2}w)| / (||Λ^{1+α/2}w|| ||u||_{H¹} ||Λ^{2-α/2+ε0}v||), u = R^⊥q1."""
    if not 1.0 < alpha < 2.0:
        raise ValueError(f"α ∈ (1,2) exigido (α={alpha})")
    if eps0 <= 0 or alpha <= 1.0 + 2.0 * eps0:
        raise ValueError(f"α > 1 + 2ε0 exigido (α={alpha}, ε0={eps0})")
    sp = q1.spectrum
    u = riesz_perp(q1)
    dv = gradient(v)
    adv = project_nodal(sp, u.x * dv.x + u.y * dv.y)
    lhs = abs(float(np.sum(sp.eigenvalues * adv.coeffs * w.coeffs)))
    terms = {
        "w": sobolev_norm(w, 1.0 + 0.5 * alpha),
        "u_h1": velocity_h1_norm(q1),
        "v": sobolev_norm(v, 2.0 - 0.5 * alpha + eps0),
    }
    rhs = terms["w"] * terms["u_h1"] * terms["v"]
    ratio = 0.0 if lhs == 0.0 else lhs / rhs
    return MarginReport("trilinear", {"alpha": alpha, "eps0": eps0}, lhs, rhs, ratio, bool(np.isfinite(ratio)), 0.0,
                        kind="ratio", rhs_terms=terms, empirical_constant=ratio, resolution=sp.nx, seed=seed)


def _refined(spectrum: Spectrum) -> Spectrum:
    return build_spectrum(spectrum.domain, 2 * spectrum.nx, 2 * spectrum.ny)


def _with_refinement(coarse: MarginReport, fine: MarginReport, limit: float) -> MarginReport:
    """Veredito: razão finita nas duas resoluções e estável dentro de ±limit."""
    if coarse.margin == 0.0:
        stable = fine.margin == 0.0
        drift = 0.0
    else:
        drift = abs(fine.margin / coarse.margin - 1.0)
        stable = drift <= limit
    coarse.verdict = bool(coarse.verdict and fine.verdict and stable)
    coarse.tol = limit
    coarse.note = f"refino {coarse.resolution}->{fine.resolution}: {drift:.3g}"
    return coarse


class ProductCheck(BaseCheck):
    check_id = "product"
    betas = (0.3, 0.7)

    def run_one(self, seed: int) -> List[MarginReport]:
        limit = self.tolerances.get("refinement", 0.2)
        sp = self.spectrum
        fine_sp = _refined(sp)
        g = make_test_field(sp, "random-band-limited", seed=seed).field
        h = make_test_field(sp, "random-band-limited", seed=seed + 10_000).field
        reports = []
        for beta in self.betas:
            for variant in PRODUCT_VARIANTS:
                coarse = product_ratio(g, h, beta, variant, seed=seed)
                fine = product_ratio(g.resample(fine_sp), h.resample(fine_sp), beta, variant, seed=seed)
                reports.append(_with_refinement(coarse, fine, limit))
        return reports


class TrilinearCheck(BaseCheck):
    check_id = "trilinear"
    alphas = (1.2, 1.5, 1.8)

    def run_one(self, seed: int) -> List[MarginReport]:
        limit = self.tolerances.get("refinement", 0.2)
        sp = self.spectrum
        fine_sp = _refined(sp)
        fields = [make_test_field(sp, "random-band-limited", seed=seed + off).field for off in (0, 20_000, 40_000)]
        reports = []
        for alpha in self.alphas:
            eps0 = 0.25 * (alpha - 1.0)
            coarse = trilinear_ratio(*fields, alpha, eps0, seed=seed)
            fine = trilinear_ratio(*(f.resample(fine_sp) for f in fields), alpha, eps0, seed=seed)
            reports.append(_with_refinement(coarse, fine, limit))
        return reports
