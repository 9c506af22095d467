from __future__ import annotations
import logging
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

logger = logging.getLogger(__name__)

GAUSS_ORDER = 16
_NODES, _WEIGHTS = leggauss(GAUSS_ORDER)

# abaixo de t = e^{-20} o integrando de c_s é tratado pela expansão 1 - e^{-t} ≈ t - t²/2
_HEAD_U = -20.0
_TAIL_T = 50.0


def _panel_sum(func: Callable[[np.ndarray], np.ndarray], u_lo: np.ndarray, u_hi: np.ndarray, panels: int) -> np.ndarray:
    width = (u_hi - u_lo) / panels
    shape = (GAUSS_ORDER,) + (1,) * width.ndim
    nodes = _NODES.reshape(shape)
    weights = _WEIGHTS.reshape(shape)
    total = None
    for p in range(panels):
        u = u_lo + width * (p + 0.5 * (nodes + 1.0))
        t = np.exp(u)
        values = np.asarray(func(t), dtype=float)
        extra = (1,) * (values.ndim - t.ndim)
        w = (0.5 * weights * width * t).reshape(t.shape + extra)
        part = np.sum(w * values, axis=0)
        total = part if total is None else total + part
    return total


def integrate_log_time(
    func: Callable[[np.ndarray], np.ndarray],
    t_lo,
    t_hi,
    rtol: float = 1e-10,
    panels: int = 8,
    max_panels: int = 4096,
    floor: float = 1e-12,
) -> np.ndarray:
    """∫_{t_lo}^{t_hi} func(t) dt com t = e^u e painéis de Gauss–Legendre em u.

    `t_lo` e `t_hi` podem ser arrays (limites por elemento); `func` recebe t com
    forma (16, *shape_dos_limites) e devolve array com o mesmo eixo inicial,
    possivelmente com eixos extras à direita. O número de painéis dobra até que a
    variação relativa de cada elemento fique abaixo de `rtol` (com piso relativo
    `floor` sobre o máximo, para elementos praticamente nulos).
    """
    u_lo = np.log(np.asarray(t_lo, dtype=float))
    u_hi = np.log(np.asarray(t_hi, dtype=float))
    if np.any(u_hi < u_lo):
        raise ValueError("limites de integração invertidos")
    previous = _panel_sum(func, u_lo, u_hi, panels)
    while panels < max_panels:
        panels *= 2
        current = _panel_sum(func, u_lo, u_hi, panels)
        scale = np.abs(current) + floor * np.max(np.abs(current))
        if np.all(np.abs(current - previous) <= rtol * scale):
            return current
        previous = current
    logger.warning("Quadratura em log-tempo não convergiu com %d painéis", panels)
    return previous


@lru_cache(maxsize=None)
def fractional_constant(s: float) -> float:
    """c_s tal que λ^{s/2} = c_s ∫_0^∞ (1 - e^{-tλ}) t^{-1-s/2} dt para todo λ > 0."""
    if not 0.0 < s < 2.0:
        raise ValueError(f"s ∈ (0,2) exigido (s={s})")
    a = 0.5 * s
    head = np.exp(_HEAD_U * (1.0 - a)) / (1.0 - a) - np.exp(_HEAD_U * (2.0 - a)) / (2.0 * (2.0 - a))
    body = integrate_log_time(lambda t: -np.expm1(-t) * t ** (-1.0 - a), np.exp(_HEAD_U), _TAIL_T)
    tail = _TAIL_T ** (-a) / a
    return float(1.0 / (head + float(body) + tail))
