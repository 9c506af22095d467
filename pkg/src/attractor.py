from __future__ import annotations
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid
from tqdm import tqdm

from src.domain import SpectralField, Spectrum, analyze, nodal_gradient, sobolev_norm
from src.errors import DegenerateBundleError
from src.fracops import riesz_nodal
from src.schemas import VOLUME_COLUMNS
from src.sqg import SQGConfig, SQGIntegrator, SQGState, run

logger = logging.getLogger(__name__)

BUNDLE_KINDS = ("eigen", "random")
GRAM_TOL = 1e-8
DEGENERACY = 1e-14


# ---------------------------------------------------------------------------
# fibrado tangente

@dataclass(frozen=True, eq=False)
class TangentBundle:
    """ξ_1..ξ_N guardados como array (N, Nx, Ny) de coeficientes."""

    spectrum: Spectrum
    coeffs: np.ndarray
    orth_every: int = 10

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 3 or c.shape[1:] != self.spectrum.shape:
            raise ValueError(f"fibrado com forma {c.shape}, esperado (N, {self.spectrum.nx}, {self.spectrum.ny})")
        if self.orth_every < 1:
            raise ValueError("orth_every ≥ 1 exigido")
        object.__setattr__(self, "coeffs", c)

    @property
    def size(self) -> int:
        return self.coeffs.shape[0]

    def field(self, i: int) -> SpectralField:
        return SpectralField(self.spectrum, self.coeffs[i])

    def gram(self) -> np.ndarray:
        """Matriz (Λξ_i, Λξ_j)."""
        lam = self.spectrum.eigenvalues
        return np.einsum("ijk,jk,ljk->il", self.coeffs, lam, self.coeffs)

    def with_coeffs(self, coeffs: np.ndarray) -> "TangentBundle":
        return TangentBundle(self.spectrum, coeffs, self.orth_every)


def initial_bundle(spectrum: Spectrum, n: int, kind: str = "eigen", seed: int = 0, orth_every: int = 10) -> TangentBundle:
    if kind not in BUNDLE_KINDS:
        raise ValueError(f"tipo de fibrado desconhecido: {kind} (use um de {BUNDLE_KINDS})")
    lam = spectrum.eigenvalues
    coeffs = np.zeros((n,) + spectrum.shape)
    if kind == "eigen":
        for i, (j, k) in enumerate(spectrum.lowest_modes(n)):
            coeffs[i, j - 1, k - 1] = 1.0 / np.sqrt(lam[j - 1, k - 1])
        return TangentBundle(spectrum, coeffs, orth_every)
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal(coeffs.shape) / lam
    bundle, _ = orthonormalize(TangentBundle(spectrum, coeffs, orth_every))
    return bundle


def _linear_operator(qbar: np.ndarray, xi: np.ndarray, spectrum: Spectrum, dealias: bool = True) -> np.ndarray:
    """L(q̄)ξ = P(R^⊥q̄·∇ξ + R^⊥ξ·∇q̄), com eixos de lote à esquerda em ξ."""
    ubx, uby = riesz_nodal(qbar, spectrum)
    gbx, gby = nodal_gradient(qbar, spectrum)
    ux, uy = riesz_nodal(xi, spectrum)
    gx, gy = nodal_gradient(xi, spectrum)
    out = analyze(ubx * gx + uby * gy + ux * gbx + uy * gby, spectrum)
    if dealias:
        out = out * spectrum.dealias_mask
    return out


def _tangent_step(xi: np.ndarray, qbar: np.ndarray, qbar_stage: np.ndarray, integrator: SQGIntegrator) -> np.ndarray:
    sp = integrator.spectrum
    dt = integrator.cfg.dt
    dealias = integrator.cfg.dealias
    decay = integrator.decay
    l1 = -_linear_operator(qbar, xi, sp, dealias)
    xi_stage = decay * (xi + dt * l1)
    l2 = -_linear_operator(qbar_stage, xi_stage, sp, dealias)
    return decay * (xi + 0.5 * dt * l1) + 0.5 * dt * l2


def linearized_step(
    xi: SpectralField,
    base: SQGState,
    cfg: SQGConfig,
    integrator: Optional[SQGIntegrator] = None,
) -> SpectralField:
    """Um passo da derivada do passo de Heun com fator integrante ao longo de q̄."""
    integrator = SQGIntegrator(cfg) if integrator is None else integrator
    stage = integrator.stage(base).coeffs
    out = _tangent_step(xi.coeffs, base.q.coeffs, stage, integrator)
    if not np.all(np.isfinite(out)):
        raise ValueError("campo tangente não finito")
    return SpectralField(xi.spectrum, out)


def orthonormalize(bundle: TangentBundle) -> Tuple[TangentBundle, np.ndarray]:
    """Gram–Schmidt modificado em (Λ·, Λ·); devolve o fibrado e log r_i por vetor.

    Σ log r_i é o incremento de log V_N desde a última ortonormalização.
    """
    lam = bundle.spectrum.eigenvalues
    vecs = bundle.coeffs.copy()
    norms0 = np.sqrt(np.einsum("ijk,jk,ijk->i", vecs, lam, vecs))
    scale = max(float(np.max(norms0)), 1e-300)
    logs = np.zeros(bundle.size)
    for i in range(bundle.size):
        for j in range(i):
            vecs[i] -= np.sum(lam * vecs[i] * vecs[j]) * vecs[j]
        r = float(np.sqrt(np.sum(lam * vecs[i] ** 2)))
        if r < DEGENERACY * scale:
            raise DegenerateBundleError(i, r)
        vecs[i] /= r
        logs[i] = np.log(r)
    return bundle.with_coeffs(vecs), logs


def _check_gram(bundle: TangentBundle, tol: float = GRAM_TOL) -> None:
    deviation = float(np.max(np.abs(bundle.gram() - np.eye(bundle.size))))
    if deviation > tol:
        raise ValueError(f"fibrado não ortonormal em D(Λ): desvio {deviation:.3g}")


def trace_contributions(bundle: TangentBundle, qbar: SpectralField, cfg: SQGConfig) -> np.ndarray:
    """(Λ^α φ_i + ελφ_i + L(q̄)φ_i, -Δφ_i) para cada φ_i do fibrado ortonormal."""
    _check_gram(bundle)
    sp = bundle.spectrum
    phi = bundle.coeffs
    lphi = _linear_operator(qbar.coeffs, phi, sp, cfg.dealias)
    return np.einsum("jk,ijk,ijk->i", sp.eigenvalues, cfg.mu * phi + lphi, phi)


def trace_AQN(bundle: TangentBundle, qbar: SpectralField, cfg: SQGConfig) -> float:
    return float(np.sum(trace_contributions(bundle, qbar, cfg)))


# ---------------------------------------------------------------------------
# decaimento de volume

@dataclass
class VolumeTrace:
    n: int
    times: np.ndarray
    log_volume: np.ndarray
    trace: np.ndarray
    rate: float = float("nan")

    @property
    def mean_trace(self) -> float:
        if self.times[-1] <= self.times[0]:
            return float(self.trace[0])
        return float(trapezoid(self.trace, self.times) / (self.times[-1] - self.times[0]))

    @property
    def consistency(self) -> float:
        """|log V_N(T) + ∫Trace| relativo a |∫Trace|."""
        integral = float(trapezoid(self.trace, self.times))
        return abs(float(self.log_volume[-1]) + integral) / max(abs(integral), 1e-300)

    def to_frame(self, amplitude: float = 1.0) -> pd.DataFrame:
        return pd.DataFrame({
            "amplitude": amplitude,
            "n": self.n,
            "t": self.times,
            "log_volume": self.log_volume,
            "trace": self.trace,
            "rate": self.rate,
        }, columns=VOLUME_COLUMNS)


def fit_rate(times: np.ndarray, log_volume: np.ndarray) -> float:
    if len(times) < 2:
        return float("nan")
    return float(np.polyfit(times, log_volume, 1)[0])


def volume_decay_run(
    cfg: SQGConfig,
    q0: SpectralField,
    n_list: Sequence[int],
    orth_every: int = 10,
    kind: str = "eigen",
    seed: int = 0,
    progress: bool = False,
) -> List[VolumeTrace]:
    """Evolui um único fibrado de posto max(n_list) ao longo da trajetória de q0.

    O Gram–Schmidt preserva os subespaços encaixados, então log V_N e o traço de
    cada N são somas acumuladas dos primeiros N vetores.
    """
    n_values = sorted(set(int(n) for n in n_list))
    if not n_values or n_values[0] < 1:
        raise ValueError("lista de N com valores ≥ 1 exigida")
    integrator = SQGIntegrator(cfg)
    base = SQGState(0.0, q0, 0)
    bundle = initial_bundle(cfg.spectrum, n_values[-1], kind, seed, orth_every)
    cum_log = np.zeros(bundle.size)
    times = [0.0]
    logs = [cum_log.copy()]
    contribs = [trace_contributions(bundle, base.q, cfg)]
    logger.info("Decaimento de volume: N_max=%d, %d passos", bundle.size, cfg.n_steps)

    xi = bundle.coeffs
    for n in tqdm(range(1, cfg.n_steps + 1), desc="volume", disable=not progress):
        stage = integrator.stage(base).coeffs
        xi = _tangent_step(xi, base.q.coeffs, stage, integrator)
        base = integrator.step(base)
        if n % orth_every == 0 or n == cfg.n_steps:
            try:
                bundle, step_logs = orthonormalize(bundle.with_coeffs(xi))
            except DegenerateBundleError as exc:
                exc.partial_trace = _assemble(n_values, np.array(times), np.array(logs), np.array(contribs))
                raise
            xi = bundle.coeffs
            cum_log = cum_log + step_logs
            times.append(base.t)
            logs.append(cum_log.copy())
            contribs.append(trace_contributions(bundle, base.q, cfg))
    return _assemble(n_values, np.array(times), np.array(logs), np.array(contribs))


def _assemble(n_values: Sequence[int], times: np.ndarray, logs: np.ndarray, contribs: np.ndarray) -> List[VolumeTrace]:
    cum_logs = np.cumsum(logs, axis=1)
    cum_traces = np.cumsum(contribs, axis=1)
    traces = []
    for n in n_values:
        lv = cum_logs[:, n - 1]
        traces.append(VolumeTrace(n, times, lv, cum_traces[:, n - 1], fit_rate(times, lv)))
    return traces


def volume_frame(traces: Sequence[VolumeTrace], amplitude: float = 1.0) -> pd.DataFrame:
    frames = [t.to_frame(amplitude) for t in traces]
    if frames:
        return pd.concat(frames, ignore_index=True)
    return pd.DataFrame(columns=VOLUME_COLUMNS)


def fit_exponent(n_values: Sequence[int], rates: Sequence[float]) -> float:
    """Inclinação de log|r_N| contra log N."""
    n = np.asarray(n_values, dtype=float)
    r = np.abs(np.asarray(rates, dtype=float))
    ok = (n > 0) & (r > 0) & np.isfinite(r)
    if np.count_nonzero(ok) < 2:
        return float("nan")
    return float(np.polyfit(np.log(n[ok]), np.log(r[ok]), 1)[0])


@dataclass
class DimensionReport:
    n0: Optional[int]
    n_max: int
    margin: float
    n0_rate: Optional[int]
    consistent: bool
    exponent: float
    exponent_range: Tuple[float, float]
    mean_traces: Dict[int, float] = field(default_factory=dict)
    rates: Dict[int, float] = field(default_factory=dict)

    @property
    def exceeds(self) -> bool:
        return self.n0 is None

    @property
    def exponent_ok(self) -> bool:
        lo, hi = self.exponent_range
        return bool(lo <= self.exponent <= hi)

    def to_dict(self) -> Dict[str, object]:
        return {
            "n0": self.n0,
            "n_max": self.n_max,
            "status": "dimension exceeds N_max" if self.exceeds else "ok",
            "margin": self.margin,
            "n0_rate": self.n0_rate,
            "consistent": self.consistent,
            "exponent": self.exponent,
            "exponent_range": list(self.exponent_range),
            "exponent_ok": self.exponent_ok,
            "mean_traces": {str(k): v for k, v in self.mean_traces.items()},
            "rates": {str(k): v for k, v in self.rates.items()},
        }


def _first_stable(n_values: List[int], ok: List[bool]) -> Optional[int]:
    for i, n in enumerate(n_values):
        if all(ok[i:]):
            return n
    return None


def dimension_estimate(traces: Sequence[VolumeTrace], alpha: float) -> DimensionReport:
    """Menor N com traço médio positivo para esse N e todos os maiores da lista."""
    ordered = sorted(traces, key=lambda t: t.n)
    if not ordered:
        raise ValueError("nenhum VolumeTrace informado")
    n_values = [t.n for t in ordered]
    means = {t.n: t.mean_trace for t in ordered}
    rates = {t.n: t.rate for t in ordered}
    n0 = _first_stable(n_values, [means[n] > 0 for n in n_values])
    n0_rate = _first_stable(n_values, [rates[n] < 0 for n in n_values])
    if n0 is None:
        logger.warning("Sem troca de sinal do traço até N_max=%d: dimensão excede N_max", n_values[-1])
        consistent = n0_rate is None
    else:
        consistent = n0_rate is not None and abs(n_values.index(n0) - n_values.index(n0_rate)) <= 1
    tail = [n for n in n_values if n0 is not None and n >= n0]
    exponent = fit_exponent(tail, [rates[n] for n in tail])
    target = 1.0 + 0.5 * alpha
    return DimensionReport(
        n0=n0,
        n_max=n_values[-1],
        margin=means[n0] if n0 is not None else float("nan"),
        n0_rate=n0_rate,
        consistent=bool(consistent),
        exponent=exponent,
        exponent_range=(target - 0.5, target + 0.5),
        mean_traces=means,
        rates=rates,
    )


# ---------------------------------------------------------------------------
# bola absorvente e continuidade do mapa solução

def gronwall_radius(times: Sequence[float], values: Sequence[float], t0: float = 0.0, window: float = 1.0) -> Dict[str, float]:
    """sup y(t) para t ≥ t0 + window e o maior ∫_t^{t+window} y."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    late = t >= t0 + window
    sup = float(np.max(y[late])) if np.any(late) else float("nan")
    best = float("nan")
    for i, start in enumerate(t):
        stop = start + window
        if stop > t[-1] + 1e-12:
            break
        sel = (t >= start) & (t <= stop + 1e-12)
        value = float(trapezoid(y[sel], t[sel]))
        best = value if np.isnan(best) else max(best, value)
    return {"sup": sup, "window_integral": best}


@dataclass
class AbsorbingBallReport:
    s: float
    rho_star: float
    initial_norms: List[float]
    entry_times: List[float]
    exits: List[int]
    tail_means: List[float]
    gronwall: List[Dict[str, float]]
    tolerance: float = 0.2

    @property
    def tail_spread(self) -> float:
        lo, hi = min(self.tail_means), max(self.tail_means)
        return float(hi / lo - 1.0) if lo > 0 else float("inf") if hi > 0 else 0.0

    @property
    def agrees(self) -> bool:
        return bool(self.tail_spread <= self.tolerance)

    def to_dict(self) -> Dict[str, object]:
        return {
            "s": self.s,
            "rho_star": self.rho_star,
            "initial_norms": self.initial_norms,
            "entry_times": self.entry_times,
            "exits": self.exits,
            "tail_means": self.tail_means,
            "tail_spread": self.tail_spread,
            "agrees": self.agrees,
            "gronwall": self.gronwall,
        }


def absorbing_ball_experiment(
    cfg: SQGConfig,
    q0_list: Sequence[SpectralField],
    s: float,
    tail_fraction: float = 0.5,
    sample_every: int = 10,
    tolerance: float = 0.2,
    progress: bool = False,
) -> AbsorbingBallReport:
    """Tempo de entrada em {||Λ^s q|| ≤ ρ*}, com ρ* o sup da cauda sobre o conjunto de dados iniciais."""
    if not 1.0 < s < 0.5 * (cfg.alpha + 1.0):
        raise ValueError(f"s ∈ (1, (α+1)/2) exigido (s={s}, α={cfg.alpha})")
    if not 0.0 < tail_fraction < 1.0:
        raise ValueError("fração da cauda em (0,1) exigida")
    key = f"sobolev_{s:g}"
    run_cfg = replace(cfg, sobolev_list=tuple(sorted(set(cfg.sobolev_list) | {s})))
    series = []
    norms = []
    for q0 in q0_list:
        norms.append(sobolev_norm(q0, s))
        result = run(run_cfg, q0, sample_every=sample_every, progress=progress)
        frame = result.to_frame()
        series.append((frame["t"].to_numpy(), frame[key].to_numpy()))
    t_tail = tail_fraction * cfg.t_end
    rho_star = max(float(np.max(v[t >= t_tail])) for t, v in series)
    entries, exits, means, gron = [], [], [], []
    for t, v in series:
        inside = v <= rho_star * (1.0 + 1e-12)
        first = int(np.argmax(inside)) if np.any(inside) else None
        entries.append(float(t[first]) if first is not None else float("nan"))
        exits.append(int(np.count_nonzero(~inside[first:])) if first is not None else 0)
        tail = t >= t_tail
        means.append(float(trapezoid(v[tail], t[tail]) / (t[tail][-1] - t[tail][0])) if np.count_nonzero(tail) > 1 else float(v[-1]))
        gron.append(gronwall_radius(t, v ** 2))
    report = AbsorbingBallReport(s, rho_star, norms, entries, exits, means, gron, tolerance)
    if not report.agrees:
        logger.warning("Médias da cauda divergem %.1f%% entre dados iniciais", 100 * report.tail_spread)
    return report


@dataclass
class LipschitzReport:
    ratio: float
    bound: float
    via_tangent: bool

    @property
    def within_bound(self) -> bool:
        return bool(self.ratio <= self.bound)


def lipschitz_estimate(q1_0: SpectralField, q2_0: SpectralField, cfg: SQGConfig, progress: bool = False) -> LipschitzReport:
    """||Λ(q1(T)-q2(T))||² / ||Λ(q1⁰-q2⁰)||² e K(T) = exp ∫ (||Λ^{2-α/2}q1||² + ||Λ^{2-α/2}q2||²) com C = 1."""
    order = 2.0 - 0.5 * cfg.alpha
    key = f"sobolev_{order:g}"
    run_cfg = replace(cfg, sobolev_list=tuple(sorted(set(cfg.sobolev_list) | {order})))
    r1 = run(run_cfg, q1_0, sample_every=1, progress=progress)
    frame1 = r1.to_frame()
    integrand = frame1[key].to_numpy() ** 2
    start1 = run_cfg.prepare_initial(q1_0)
    start2 = run_cfg.prepare_initial(q2_0)
    diff0 = start1 - start2
    if sobolev_norm(diff0, 1.0) == 0.0:
        # limite via dinâmica tangente na direção do modo mais baixo
        integrand = 2.0 * integrand
        bound = float(np.exp(trapezoid(integrand, frame1["t"].to_numpy())))
        j, k = cfg.spectrum.lowest_modes(1)[0]
        xi0 = SpectralField.mode(cfg.spectrum, j, k)
        integrator = SQGIntegrator(run_cfg)
        base = SQGState(0.0, start1, 0)
        xi = xi0
        for _ in range(run_cfg.n_steps):
            xi = linearized_step(xi, base, run_cfg, integrator)
            base = integrator.step(base)
        ratio = sobolev_norm(xi, 1.0) ** 2 / sobolev_norm(xi0, 1.0) ** 2
        return LipschitzReport(ratio, bound, True)
    r2 = run(run_cfg, q2_0, sample_every=1, progress=progress)
    frame2 = r2.to_frame()
    integrand = integrand + frame2[key].to_numpy() ** 2
    bound = float(np.exp(trapezoid(integrand, frame1["t"].to_numpy())))
    ratio = sobolev_norm(r1.state.q - r2.state.q, 1.0) ** 2 / sobolev_norm(diff0, 1.0) ** 2
    return LipschitzReport(ratio, bound, False)
