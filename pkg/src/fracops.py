from __future__ import annotations
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import erfc, gamma

from src.domain import (
    PhysicalField,
    RectDomain,
    SpectralField,
    Spectrum,
    VectorField,
    evaluate_at,
    forward_transform,
    gradient_at,
    nodal_gradient,
    synthesize,
)
from src.utils.quadrature import (
    GAUSS_ORDER,
    fractional_constant,
    integrate_log_time,
)

logger = logging.getLogger(__name__)

MULTIPLIER_KINDS = ("fractional", "heat", "mollifier", "truncated")

# abaixo de t* = 0.05 L² o núcleo 1-D usa imagens; acima, a série de autofunções
_IMAGE_SWITCH = 0.05
_IMAGES = np.arange(-3, 4)
_SERIES_DECAY = 40.0


def _check_eps(eps: float) -> float:
    if not 0.0 < eps < 1.0:
        raise ValueError(f"ε ∈ (0,1) exigido (ε={eps})")
    return float(eps)


@dataclass(frozen=True)
class MultiplierSpec:
    kind: str
    s: Optional[float] = None
    t: Optional[float] = None
    eps: Optional[float] = None
    eta: Optional[float] = None

    def __post_init__(self):
        if self.kind not in MULTIPLIER_KINDS:
            raise ValueError(f"tipo de multiplicador desconhecido: {self.kind}")
        if self.kind == "fractional" and self.s is None:
            raise ValueError("multiplicador fracionário exige s")
        if self.kind == "heat" and (self.t is None or self.t < 0):
            raise ValueError("t ≥ 0 exigido")
        if self.kind == "mollifier":
            _check_eps(self.eps if self.eps is not None else -1.0)
        if self.kind == "truncated":
            if self.s is None or not 0.0 < self.s < 2.0:
                raise ValueError("s ∈ (0,2) exigido")
            if self.eta is None or not 0.0 < self.eta < 1.0:
                raise ValueError("η ∈ (0,1) exigido")

    def values(self, spectrum: Spectrum, symbol: str = "exact") -> np.ndarray:
        lam = spectrum.symbol(symbol)
        if self.kind == "fractional":
            return lam ** (0.5 * self.s)
        if self.kind == "heat":
            return np.exp(-self.t * lam)
        if self.kind == "mollifier":
            return _mollifier_table(self.eps, spectrum, symbol)
        return _truncated_table(self.s, self.eta, spectrum, symbol)

    def apply(self, h: SpectralField, symbol: str = "exact") -> SpectralField:
        return SpectralField(h.spectrum, self.values(h.spectrum, symbol) * h.coeffs)


# ---------------------------------------------------------------------------
# multiplicadores espectrais

def apply_fractional(s: float, h: SpectralField, symbol: str = "exact") -> SpectralField:
    return MultiplierSpec("fractional", s=s).apply(h, symbol)


def heat_apply(t: float, h: SpectralField, symbol: str = "exact") -> SpectralField:
    if t < 0:
        raise ValueError(f"t ≥ 0 exigido (t={t})")
    return MultiplierSpec("heat", t=t).apply(h, symbol)


def mollifier_multiplier(eps: float, lam) -> np.ndarray:
    """m_ε(λ) = (-1/ln ε) ∫_ε^{1/ε} e^{-tλ} dt/t."""
    eps = _check_eps(eps)
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("λ > 0 exigido")
    flat = lam.ravel()
    integral = integrate_log_time(lambda t: np.exp(-np.multiply.outer(t, flat)) / t[:, None], eps, 1.0 / eps)
    m = (-1.0 / np.log(eps)) * integral
    return m.reshape(lam.shape) if lam.ndim else float(m[0])


@lru_cache(maxsize=64)
def _mollifier_table(eps: float, spectrum: Spectrum, symbol: str) -> np.ndarray:
    lam = spectrum.symbol(symbol)
    unique, inverse = np.unique(lam, return_inverse=True)
    table = mollifier_multiplier(eps, unique)[inverse].reshape(lam.shape)
    table.setflags(write=False)
    return table


def mollify(eps: float, h: SpectralField, symbol: str = "exact") -> SpectralField:
    return MultiplierSpec("mollifier", eps=_check_eps(eps)).apply(h, symbol)


def mollify_by_heat_quadrature(eps: float, h: SpectralField, panels: int = 32) -> SpectralField:
    """J_ε h pela média logarítmica do semigrupo do calor avaliada na malha física."""
    eps = _check_eps(eps)
    nodes, weights = leggauss(GAUSS_ORDER)
    u_lo, u_hi = np.log(eps), -np.log(eps)
    width = (u_hi - u_lo) / panels
    acc = np.zeros(h.spectrum.grid_shape)
    for p in range(panels):
        for node, weight in zip(nodes, weights):
            t = np.exp(u_lo + width * (p + 0.5 * (node + 1.0)))
            acc += 0.5 * weight * width * synthesize(heat_apply(t, h).coeffs, h.spectrum)
    return forward_transform(PhysicalField(h.spectrum, acc * (-1.0 / np.log(eps))))


def mollifier_smoothing_bound(s: float, eps_values: Iterable[float], lam_values) -> float:
    """Maior valor de m_ε(λ) λ^{s/2} ε^{s/2} sobre a grade (ε, λ) dada."""
    lam = np.asarray(lam_values, dtype=float)
    worst = 0.0
    for eps in eps_values:
        m = mollifier_multiplier(eps, lam)
        worst = max(worst, float(np.max(m * lam ** (0.5 * s) * eps ** (0.5 * s))))
    return worst


def truncated_multiplier(s: float, eta: float, lam) -> np.ndarray:
    """c_s ∫_η^∞ (1 - e^{-tλ}) t^{-1-s/2} dt por elemento de λ."""
    if not 0.0 < s < 2.0:
        raise ValueError(f"s ∈ (0,2) exigido (s={s})")
    if not 0.0 < eta < 1.0:
        raise ValueError(f"η ∈ (0,1) exigido (η={eta})")
    a = 0.5 * s
    lam = np.asarray(lam, dtype=float)
    flat = lam.ravel()
    # acima de t_hi o fator 1 - e^{-tλ} difere de 1 por menos de e^{-50}
    t_hi = np.maximum(50.0 / flat, 2.0 * eta)
    body = integrate_log_time(lambda t: -np.expm1(-t * flat) * t ** (-1.0 - a), eta, t_hi)
    values = fractional_constant(s) * (body + t_hi ** (-a) / a)
    return values.reshape(lam.shape)


@lru_cache(maxsize=64)
def _truncated_table(s: float, eta: float, spectrum: Spectrum, symbol: str) -> np.ndarray:
    lam = spectrum.symbol(symbol)
    unique, inverse = np.unique(lam, return_inverse=True)
    table = truncated_multiplier(s, eta, unique)[inverse].reshape(lam.shape)
    table.setflags(write=False)
    return table


def truncated_fractional(s: float, eta: float, f: SpectralField, symbol: str = "exact") -> SpectralField:
    return MultiplierSpec("truncated", s=s, eta=eta).apply(f, symbol)


# ---------------------------------------------------------------------------
# núcleo do calor

def heat_kernel_eval(spectrum: Spectrum, x, y, t: float, jmax: Optional[int] = None) -> np.ndarray:
    """Série truncada Σ e^{-tλ} w(x) w(y) com j, k ≤ jmax."""
    if t <= 0:
        raise ValueError("t > 0 exigido (série diverge em t = 0)")
    jmax = min(spectrum.nx, spectrum.ny) if jmax is None else int(jmax)
    if jmax < 1 or jmax > min(spectrum.nx, spectrum.ny):
        raise ValueError(f"Jmax fora de [1, {min(spectrum.nx, spectrum.ny)}]")
    lx, ly = spectrum.domain.lx, spectrum.domain.ly
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    j = spectrum.j[:jmax]
    k = spectrum.k[:jmax]
    # produtos simétricos em (x, y) termo a termo
    sx = np.sin(np.multiply.outer(x[:, 0], j) * np.pi / lx) * np.sin(np.multiply.outer(y[:, 0], j) * np.pi / lx)
    sy = np.sin(np.multiply.outer(x[:, 1], k) * np.pi / ly) * np.sin(np.multiply.outer(y[:, 1], k) * np.pi / ly)
    decay = np.exp(-t * spectrum.eigenvalues[:jmax, :jmax])
    values = spectrum.normalization ** 2 * np.einsum("mj,jk,mk->m", sx, decay, sy)
    return values if values.size > 1 else float(values[0])


def _series_terms(t: float, length: float) -> int:
    return int(np.ceil(length / np.pi * np.sqrt(_SERIES_DECAY / t))) + 1


def _heat_kernel_1d(x, y, t: float, length: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if t <= _IMAGE_SWITCH * length ** 2:
        shift = (2.0 * length * _IMAGES).reshape((-1,) + (1,) * np.broadcast(x, y).ndim)
        norm = 1.0 / np.sqrt(4.0 * np.pi * t)
        direct = np.exp(-((x - y) + shift) ** 2 / (4.0 * t))
        mirror = np.exp(-((x + y) + shift) ** 2 / (4.0 * t))
        return norm * np.sum(direct - mirror, axis=0)
    j = np.arange(1, _series_terms(t, length) + 1).reshape((-1,) + (1,) * np.broadcast(x, y).ndim)
    terms = np.exp(-t * (np.pi * j / length) ** 2) * np.sin(j * np.pi * x / length) * np.sin(j * np.pi * y / length)
    return (2.0 / length) * np.sum(terms, axis=0)


def _heat_constant_complement_1d(x, t: float, length: float) -> np.ndarray:
    """v = 1 - e^{tΔ}1 no intervalo [0, L] com Dirichlet."""
    x = np.asarray(x, dtype=float)
    if t <= _IMAGE_SWITCH * length ** 2:
        r = 2.0 * np.sqrt(t)
        v = np.zeros_like(x)
        for k in range(4):
            v += (-1) ** k * (erfc((x + k * length) / r) + erfc(((k + 1) * length - x) / r))
        return v
    j = np.arange(1, _series_terms(t, length) + 1, 2).reshape((-1,) + (1,) * x.ndim)
    u = np.sum(4.0 / (j * np.pi) * np.sin(j * np.pi * x / length) * np.exp(-t * (np.pi * j / length) ** 2), axis=0)
    return 1.0 - u


def heat_kernel_exact(domain: RectDomain, x, y, t: float) -> np.ndarray:
    """Núcleo do calor de Dirichlet completo no retângulo (produto de núcleos 1-D)."""
    if t <= 0:
        raise ValueError("t > 0 exigido")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return _heat_kernel_1d(x[..., 0], y[..., 0], t, domain.lx) * _heat_kernel_1d(x[..., 1], y[..., 1], t, domain.ly)


# ---------------------------------------------------------------------------
# núcleos K_s e B_s

@dataclass(frozen=True, eq=False)
class KernelTable:
    s: float
    domain: RectDomain
    points: np.ndarray
    weights: np.ndarray
    k_values: np.ndarray
    b_values: np.ndarray
    t_lo: float
    t_hi: float
    rtol: float

    @property
    def decay_constant(self) -> float:
        """C_s empírico em K_s(x, y) ≤ C_s |x - y|^{-2-2s}."""
        dist = _pairwise_distance(self.points)
        off = ~np.eye(len(self.points), dtype=bool)
        return float(np.max(self.k_values[off] * dist[off] ** (2.0 + 2.0 * self.s)))


def _pairwise_distance(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt(np.sum(diff ** 2, axis=-1))


def kernel_assemble(
    s: float,
    domain: RectDomain,
    points,
    weights=None,
    rtol: float = 1e-8,
) -> KernelTable:
    if not 0.0 < s < 1.0:
        raise ValueError(f"s ∈ (0,1) exigido (s={s})")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    m = len(pts)
    wts = np.full(m, domain.area / m) if weights is None else np.asarray(weights, dtype=float)
    dist = _pairwise_distance(pts)
    off = ~np.eye(m, dtype=bool)
    if np.any(dist[off] == 0.0):
        raise ValueError("par de pontos coincidente: K_s não é definido em x = y")
    bdist = domain.boundary_distance(pts[:, 0], pts[:, 1])
    if np.any(bdist == 0.0):
        raise ValueError("pontos de amostragem devem ser interiores")

    c2s = fractional_constant(2.0 * s)
    lam1 = np.pi ** 2 * (1.0 / domain.lx ** 2 + 1.0 / domain.ly ** 2)
    t_hi = _SERIES_DECAY / lam1
    t_lo = float(np.min(dist[off])) ** 2 / 240.0

    # fatoração pelas coordenadas distintas: H = h_x(x1, y1) h_y(x2, y2)
    ux, ix = np.unique(pts[:, 0], return_inverse=True)
    uy, iy = np.unique(pts[:, 1], return_inverse=True)

    def k_integrand(t: np.ndarray) -> np.ndarray:
        out = np.empty((t.size, m, m))
        for n, tn in enumerate(t):
            hx = _heat_kernel_1d(ux[:, None], ux[None, :], tn, domain.lx)
            hy = _heat_kernel_1d(uy[:, None], uy[None, :], tn, domain.ly)
            out[n] = hx[ix[:, None], ix[None, :]] * hy[iy[:, None], iy[None, :]] * tn ** (-1.0 - s)
        out[:, ~off] = 0.0
        return out

    def b_integrand(t: np.ndarray) -> np.ndarray:
        out = np.empty((t.size, m))
        for n, tn in enumerate(t):
            vx = _heat_constant_complement_1d(ux, tn, domain.lx)[ix]
            vy = _heat_constant_complement_1d(uy, tn, domain.ly)[iy]
            out[n] = (vx + vy - vx * vy) * tn ** (-1.0 - s)
        return out

    k_values = 0.5 * c2s * integrate_log_time(k_integrand, t_lo, t_hi, rtol=rtol)
    b_lo = float(np.min(bdist)) ** 2 / 240.0
    b_values = c2s * (integrate_log_time(b_integrand, b_lo, t_hi, rtol=rtol) + t_hi ** (-s) / s)
    logger.debug("Núcleos K_s/B_s montados: s=%g, %d pontos", s, m)
    return KernelTable(s, domain, pts, wts, k_values, b_values, t_lo, t_hi, rtol)


def kernel_quadratic_form(table: KernelTable, psi: SpectralField, self_cell: bool = True) -> float:
    """∫∫(ψ(x)-ψ(y))² K_s + ∫ψ² B_s pela regra do ponto médio nas amostras da tabela.

    A célula de cada amostra (trocada por um disco de mesma área) recebe a
    contribuição assintótica K_s ≈ C_0 r^{-2-2s} com ψ linearizado.
    """
    s = table.s
    vals = evaluate_at(psi, table.points)
    w = table.weights
    double = float(np.sum(w[:, None] * w[None, :] * (vals[:, None] - vals[None, :]) ** 2 * table.k_values))
    boundary = float(np.sum(w * vals ** 2 * table.b_values))
    correction = 0.0
    if self_cell:
        grad2 = np.sum(gradient_at(psi, table.points) ** 2, axis=1)
        radius = np.sqrt(w / np.pi)
        c0 = 0.5 * fractional_constant(2.0 * s) * gamma(1.0 + s) * 4.0 ** (1.0 + s) / (4.0 * np.pi)
        correction = float(np.sum(w * grad2 * c0 * np.pi * radius ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)))
    return double + boundary + correction


# ---------------------------------------------------------------------------
# transformada de Riesz rotacionada

def riesz_nodal(coeffs: np.ndarray, spectrum: Spectrum) -> Tuple[np.ndarray, np.ndarray]:
    psi = coeffs / np.sqrt(spectrum.eigenvalues)
    gx, gy = nodal_gradient(psi, spectrum)
    return -gy, gx


def riesz_perp(q: SpectralField) -> VectorField:
    ux, uy = riesz_nodal(q.coeffs, q.spectrum)
    return VectorField(q.spectrum, ux, uy)


def riesz_divergence(q: SpectralField) -> float:
    """Maior coeficiente (base cos-cos) de ∇·R^⊥q calculado espectralmente."""
    sp = q.spectrum
    psi = q.coeffs / np.sqrt(sp.eigenvalues)
    kx = (sp.j * np.pi / sp.domain.lx)[:, None]
    ky = (sp.k * np.pi / sp.domain.ly)[None, :]
    dx_u1 = -(kx * (ky * psi))
    dy_u2 = ky * (kx * psi)
    return float(np.max(np.abs(dx_u1 + dy_u2)))


def velocity_h1_norm(q: SpectralField) -> float:
    """||R^⊥q||_{H¹}: ||u||² = Σ q̂², ||∇u||² = Σ λ q̂²."""
    c2 = q.coeffs ** 2
    return float(np.sqrt(np.sum(c2) + np.sum(q.spectrum.eigenvalues * c2)))
