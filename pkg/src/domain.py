from __future__ import annotations
from dataclasses import dataclass
from functools import cached_property
from typing import List, Tuple

import numpy as np
import scipy.fft
from scipy.integrate import trapezoid

# Base de Dirichlet no retângulo [0, Lx] x [0, Ly]:
#   w_jk(x, y) = 2/sqrt(Lx Ly) sin(j pi x / Lx) sin(k pi y / Ly),  ||w_jk||_L2 = 1
# Arrays de coeficientes têm forma (..., Nx, Ny); arrays nodais (..., Nx+2, Ny+2),
# indexados [x, y], com os nós de fronteira incluídos.

SYMBOLS = ("exact", "grid")


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RectDomain:
    lx: float = 1.0
    ly: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.lx) and np.isfinite(self.ly) and self.lx > 0 and self.ly > 0):
            raise ValueError(f"Lx > 0 e Ly > 0 exigidos (Lx={self.lx}, Ly={self.ly})")
        object.__setattr__(self, "lx", float(self.lx))
        object.__setattr__(self, "ly", float(self.ly))

    @property
    def diam(self) -> float:
        return float(np.sqrt(self.lx * self.lx + self.ly * self.ly))

    @property
    def area(self) -> float:
        return self.lx * self.ly

    def boundary_distance(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        d = np.minimum(np.minimum(x, self.lx - x), np.minimum(y, self.ly - y))
        if np.any(d < 0):
            raise ValueError("ponto fora do domínio")
        return d


@dataclass(frozen=True)
class Spectrum:
    """Tabela de autovalores de Dirichlet para os modos 1 <= j <= Nx, 1 <= k <= Ny.

    A malha de colocação associada tem Nx+1 intervalos em x (Nx nós interiores),
    o que torna a DST-I exata para todos os modos da tabela.
    """

    domain: RectDomain
    nx: int
    ny: int

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny or self.nx < 1 or self.ny < 1:
            raise ValueError(f"Nx, Ny ≥ 1 exigidos (Nx={self.nx}, Ny={self.ny})")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def grid_shape(self) -> Tuple[int, int]:
        return (self.nx + 2, self.ny + 2)

    @property
    def hx(self) -> float:
        return self.domain.lx / (self.nx + 1)

    @property
    def hy(self) -> float:
        return self.domain.ly / (self.ny + 1)

    @property
    def normalization(self) -> float:
        return 2.0 / np.sqrt(self.domain.area)

    @cached_property
    def j(self) -> np.ndarray:
        return _frozen(np.arange(1, self.nx + 1, dtype=float))

    @cached_property
    def k(self) -> np.ndarray:
        return _frozen(np.arange(1, self.ny + 1, dtype=float))

    @cached_property
    def x_nodes(self) -> np.ndarray:
        return _frozen(np.linspace(0.0, self.domain.lx, self.nx + 2))

    @cached_property
    def y_nodes(self) -> np.ndarray:
        return _frozen(np.linspace(0.0, self.domain.ly, self.ny + 2))

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        lx, ly = self.domain.lx, self.domain.ly
        lam = np.pi ** 2 * ((self.j ** 2 / lx ** 2)[:, None] + (self.k ** 2 / ly ** 2)[None, :])
        return _frozen(lam)

    @cached_property
    def grid_eigenvalues(self) -> np.ndarray:
        # autovalores do Laplaciano de 5 pontos com Dirichlet na mesma malha
        sx = np.sin(self.j * np.pi / (2 * (self.nx + 1))) ** 2 * 4.0 / self.hx ** 2
        sy = np.sin(self.k * np.pi / (2 * (self.ny + 1))) ** 2 * 4.0 / self.hy ** 2
        return _frozen(sx[:, None] + sy[None, :])

    def symbol(self, kind: str = "exact") -> np.ndarray:
        if kind == "exact":
            return self.eigenvalues
        if kind == "grid":
            return self.grid_eigenvalues
        raise ValueError(f"símbolo desconhecido: {kind} (use um de {SYMBOLS})")

    @property
    def lambda1(self) -> float:
        return float(self.eigenvalues[0, 0])

    def lambda1_of(self, kind: str = "exact") -> float:
        return float(self.symbol(kind)[0, 0])

    @cached_property
    def modes(self) -> List[Tuple[int, int]]:
        return [(j, k) for j in range(1, self.nx + 1) for k in range(1, self.ny + 1)]

    def lowest_modes(self, count: int) -> List[Tuple[int, int]]:
        if count < 1 or count > self.nx * self.ny:
            raise ValueError(f"número de modos fora de [1, {self.nx * self.ny}]: {count}")
        order = np.argsort(self.eigenvalues.ravel(), kind="stable")[:count]
        return [(int(i // self.ny) + 1, int(i % self.ny) + 1) for i in order]

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        # regra dos 2/3 transplantada para a base de senos
        mask = (self.j <= 2.0 * self.nx / 3.0)[:, None] & (self.k <= 2.0 * self.ny / 3.0)[None, :]
        return _frozen(mask)


@dataclass(frozen=True, eq=False)
class SpectralField:
    spectrum: Spectrum
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != self.spectrum.shape:
            raise ValueError(f"coeficientes com forma {c.shape}, esperado {self.spectrum.shape}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, spectrum: Spectrum) -> "SpectralField":
        return cls(spectrum, np.zeros(spectrum.shape))

    @classmethod
    def mode(cls, spectrum: Spectrum, j: int, k: int, amplitude: float = 1.0) -> "SpectralField":
        if not (1 <= j <= spectrum.nx and 1 <= k <= spectrum.ny):
            raise ValueError(f"modo ({j},{k}) fora do espectro {spectrum.shape}")
        c = np.zeros(spectrum.shape)
        c[j - 1, k - 1] = amplitude
        return cls(spectrum, c)

    def _same(self, other: "SpectralField") -> None:
        if other.spectrum != self.spectrum:
            raise ValueError("campos em espectros diferentes")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._same(other)
        return SpectralField(self.spectrum, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._same(other)
        return SpectralField(self.spectrum, self.coeffs - other.coeffs)

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.spectrum, -self.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.spectrum, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def inner(self, other: "SpectralField", sigma: float = 0.0, symbol: str = "exact") -> float:
        """(Λ^σ f, g) no espaço de coeficientes: Σ λ^{σ/2} f̂ ĝ."""
        self._same(other)
        weights = self.spectrum.symbol(symbol) ** (sigma / 2.0) if sigma != 0 else 1.0
        return float(np.sum(weights * self.coeffs * other.coeffs))

    def truncate(self, jmax: int, kmax: int | None = None) -> "SpectralField":
        kmax = jmax if kmax is None else kmax
        c = self.coeffs.copy()
        c[jmax:, :] = 0.0
        c[:, kmax:] = 0.0
        return SpectralField(self.spectrum, c)

    def resample(self, spectrum: Spectrum) -> "SpectralField":
        """Reembute os coeficientes em outro espectro do mesmo domínio (zero-padding ou corte)."""
        if spectrum.domain != self.spectrum.domain:
            raise ValueError("resample exige o mesmo domínio")
        c = np.zeros(spectrum.shape)
        nx, ny = min(spectrum.nx, self.spectrum.nx), min(spectrum.ny, self.spectrum.ny)
        c[:nx, :ny] = self.coeffs[:nx, :ny]
        return SpectralField(spectrum, c)


@dataclass(frozen=True, eq=False)
class PhysicalField:
    spectrum: Spectrum
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.spectrum.grid_shape:
            raise ValueError(f"valores nodais com forma {v.shape}, esperado {self.spectrum.grid_shape}")
        object.__setattr__(self, "values", v)

    @property
    def domain(self) -> RectDomain:
        return self.spectrum.domain

    @classmethod
    def from_function(cls, spectrum: Spectrum, func) -> "PhysicalField":
        x, y = np.meshgrid(spectrum.x_nodes, spectrum.y_nodes, indexing="ij")
        return cls(spectrum, func(x, y))


@dataclass(frozen=True, eq=False)
class VectorField:
    spectrum: Spectrum
    x: np.ndarray
    y: np.ndarray

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.x, self.y)

    def max_norm(self) -> float:
        return float(np.max(self.magnitude()))


# ---------------------------------------------------------------------------
# transformadas (nível de array, com eixos de lote à esquerda)

def _pad_axis(a: np.ndarray, axis: int) -> np.ndarray:
    width = [(0, 0)] * a.ndim
    width[axis] = (1, 1)
    return np.pad(a, width)


def _sine_synthesis(c: np.ndarray, axis: int) -> np.ndarray:
    return _pad_axis(0.5 * scipy.fft.dst(c, type=1, axis=axis), axis)


def _cosine_synthesis(c: np.ndarray, axis: int) -> np.ndarray:
    return 0.5 * scipy.fft.dct(_pad_axis(c, axis), type=1, axis=axis)


def _sine_analysis(values: np.ndarray, axis: int) -> np.ndarray:
    n = values.shape[axis] - 1
    interior = np.take(values, np.arange(1, n), axis=axis)
    return scipy.fft.dst(interior, type=1, axis=axis) / n


def synthesize(coeffs: np.ndarray, spectrum: Spectrum) -> np.ndarray:
    return spectrum.normalization * _sine_synthesis(_sine_synthesis(coeffs, -2), -1)


def analyze(values: np.ndarray, spectrum: Spectrum) -> np.ndarray:
    return _sine_analysis(_sine_analysis(values, -2), -1) / spectrum.normalization


def nodal_gradient(coeffs: np.ndarray, spectrum: Spectrum) -> Tuple[np.ndarray, np.ndarray]:
    kx = spectrum.j * np.pi / spectrum.domain.lx
    ky = spectrum.k * np.pi / spectrum.domain.ly
    gx = _cosine_synthesis(_sine_synthesis(coeffs * kx[:, None], -1), -2)
    gy = _sine_synthesis(_cosine_synthesis(coeffs * ky[None, :], -1), -2)
    return spectrum.normalization * gx, spectrum.normalization * gy


def project_nodal(spectrum: Spectrum, values: np.ndarray) -> SpectralField:
    return forward_transform(PhysicalField(spectrum, values))


# ---------------------------------------------------------------------------
# operações públicas

def build_spectrum(domain: RectDomain, nx: int, ny: int | None = None) -> Spectrum:
    return Spectrum(domain, nx, nx if ny is None else ny)


def forward_transform(f: PhysicalField) -> SpectralField:
    # nós de fronteira são ignorados: a base já impõe Dirichlet
    if not np.all(np.isfinite(f.values)):
        raise ValueError("valores nodais não finitos")
    return SpectralField(f.spectrum, analyze(f.values, f.spectrum))


def inverse_transform(h: SpectralField) -> PhysicalField:
    if not np.all(np.isfinite(h.coeffs)):
        raise ValueError("coeficientes não finitos")
    return PhysicalField(h.spectrum, synthesize(h.coeffs, h.spectrum))


def gradient(h: SpectralField) -> VectorField:
    gx, gy = nodal_gradient(h.coeffs, h.spectrum)
    return VectorField(h.spectrum, gx, gy)


def integrate(f: PhysicalField) -> float:
    sp = f.spectrum
    return float(trapezoid(trapezoid(f.values, dx=sp.hy, axis=1), dx=sp.hx, axis=0))


def lp_norm(f: PhysicalField, p: float) -> float:
    if not (np.isinf(p) or p >= 1):
        raise ValueError(f"p ≥ 1 exigido (p={p})")
    v = np.abs(f.values)
    if np.isinf(p):
        return float(v.max())
    return integrate(PhysicalField(f.spectrum, v ** p)) ** (1.0 / p)


def sobolev_norm(h: SpectralField, sigma: float, symbol: str = "exact") -> float:
    """||Λ^σ h||_L2 = (Σ λ^σ ĥ²)^{1/2}; σ negativo dá a norma dual."""
    weights = h.spectrum.symbol(symbol) ** sigma
    return float(np.sqrt(np.sum(weights * h.coeffs ** 2)))


def evaluate_at(h: SpectralField, points) -> np.ndarray:
    sp = h.spectrum
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    sx = np.sin(np.outer(pts[:, 0], sp.j * np.pi / sp.domain.lx))
    sy = np.sin(np.outer(pts[:, 1], sp.k * np.pi / sp.domain.ly))
    return sp.normalization * np.einsum("mj,jk,mk->m", sx, h.coeffs, sy)


def gradient_at(h: SpectralField, points) -> np.ndarray:
    sp = h.spectrum
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    kx = sp.j * np.pi / sp.domain.lx
    ky = sp.k * np.pi / sp.domain.ly
    sx, cx = np.sin(np.outer(pts[:, 0], kx)), np.cos(np.outer(pts[:, 0], kx)) * kx
    sy, cy = np.sin(np.outer(pts[:, 1], ky)), np.cos(np.outer(pts[:, 1], ky)) * ky
    gx = np.einsum("mj,jk,mk->m", cx, h.coeffs, sy)
    gy = np.einsum("mj,jk,mk->m", sx, h.coeffs, cy)
    return sp.normalization * np.stack([gx, gy], axis=1)


def cell_centered_points(domain: RectDomain, n_side: int, n_side_y: int | None = None) -> Tuple[np.ndarray, np.ndarray]:
    """Centros de células (regra do ponto médio) e pesos (área de cada célula)."""
    ny = n_side if n_side_y is None else n_side_y
    if n_side < 1 or ny < 1:
        raise ValueError("n_side ≥ 1 exigido")
    hx, hy = domain.lx / n_side, domain.ly / ny
    xs = (np.arange(n_side) + 0.5) * hx
    ys = (np.arange(ny) + 0.5) * hy
    x, y = np.meshgrid(xs, ys, indexing="ij")
    points = np.stack([x.ravel(), y.ravel()], axis=1)
    return points, np.full(points.shape[0], hx * hy)
