from __future__ import annotations
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from src.domain import (
    SpectralField,
    Spectrum,
    VectorField,
    build_spectrum,
    gradient,
    inverse_transform,
    lp_norm,
    project_nodal,
    sobolev_norm,
)
from src.errors import CFLViolation, ConvergenceError, DivergenceError
from src.fracops import mollify, riesz_perp
from src.schemas import (
    DIAGNOSTIC_COLUMNS,
    EPS_STUDY_COLUMNS,
    RESOLUTION_STUDY_COLUMNS,
    TIMESTEP_STUDY_COLUMNS,
)
from src.utils.checkpoint import Checkpoint, save_checkpoint

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SQGConfig:
    """Parâmetros de uma integração do SQG forçado (ε = 0) ou do sistema regularizado (ε > 0)."""

    spectrum: Spectrum
    alpha: float
    epsilon: float = 0.0
    dt: float = 1e-3
    t_end: float = 1.0
    forcing: Optional[SpectralField] = None
    delta: Optional[float] = None
    cfl: float = 0.5
    dealias: bool = True
    lp_list: Tuple[float, ...] = ()
    sobolev_list: Tuple[float, ...] = ()

    def __post_init__(self):
        if not 1.0 < self.alpha < 2.0:
            raise ValueError(f"α ∈ (1,2) exigido (α={self.alpha})")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError(f"ε ∈ [0,1) exigido (ε={self.epsilon})")
        if not self.dt > 0:
            raise ValueError(f"Δt > 0 exigido (Δt={self.dt})")
        if self.t_end < 0:
            raise ValueError(f"T ≥ 0 exigido (T={self.t_end})")
        if self.cfl <= 0:
            raise ValueError(f"CFL > 0 exigido (cfl={self.cfl})")
        delta = 0.25 * (self.alpha - 1.0) if self.delta is None else float(self.delta)
        if not 0.0 < delta < 0.5 * (self.alpha - 1.0):
            raise ValueError(f"δ ∈ (0, (α-1)/2) exigido (δ={delta})")
        object.__setattr__(self, "delta", delta)
        forcing = SpectralField.zeros(self.spectrum) if self.forcing is None else self.forcing
        if forcing.spectrum != self.spectrum:
            raise ValueError("forçamento em espectro diferente do da configuração")
        object.__setattr__(self, "forcing", forcing)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def lp_exponents(self) -> Tuple[float, ...]:
        # a norma L^{1/δ} entra sempre
        return tuple(sorted(set(self.lp_list) | {1.0 / self.delta}))

    @cached_property
    def mu(self) -> np.ndarray:
        lam = self.spectrum.eigenvalues
        return lam ** (0.5 * self.alpha) + self.epsilon * lam

    @cached_property
    def effective_forcing(self) -> SpectralField:
        f = mollify(self.epsilon, self.forcing) if self.epsilon > 0 else self.forcing
        return self._masked(f)

    def _masked(self, h: SpectralField) -> SpectralField:
        if not self.dealias:
            return h
        return SpectralField(h.spectrum, h.coeffs * self.spectrum.dealias_mask)

    def prepare_initial(self, q0: SpectralField) -> SpectralField:
        """q^ε(0) = J_ε q0 para ε > 0, restrito aos modos não filtrados."""
        if q0.spectrum != self.spectrum:
            raise ValueError("dado inicial em espectro diferente do da configuração")
        q = mollify(self.epsilon, q0) if self.epsilon > 0 else q0
        return self._masked(q)


@dataclass(frozen=True, eq=False)
class SQGState:
    t: float
    q: SpectralField
    step: int = 0

    @cached_property
    def u(self) -> VectorField:
        return riesz_perp(self.q)


@dataclass
class DiagnosticRecord:
    t: float
    l2: float
    dissipation: float
    dual: float
    weak_dissipation: float
    gradient: float
    forcing_pairing: float
    energy_residual: float
    cancellation_residual: float
    extras: Dict[str, float] = field(default_factory=dict)
    # μ_jk q̂_jk² por modo; não vai para o CSV
    dissipation_density: Optional[np.ndarray] = field(default=None, repr=False)

    def to_row(self) -> Dict[str, float]:
        row = asdict(self)
        row.pop("dissipation_density")
        extras = row.pop("extras")
        row.update(extras)
        return row


@dataclass
class RunResult:
    records: List[DiagnosticRecord]
    state: SQGState

    def to_frame(self) -> pd.DataFrame:
        rows = [r.to_row() for r in self.records]
        extra = [c for c in (rows[0] if rows else {}) if c not in DIAGNOSTIC_COLUMNS]
        return pd.DataFrame(rows, columns=DIAGNOSTIC_COLUMNS + extra)


def nonlinear_term(q: SpectralField, dealias: bool = True) -> SpectralField:
    """Projeção de R^⊥q · ∇q na base de senos, com a regra dos 2/3."""
    sp = q.spectrum
    u = riesz_perp(q)
    g = gradient(q)
    adv = project_nodal(sp, u.x * g.x + u.y * g.y)
    if dealias:
        return SpectralField(sp, adv.coeffs * sp.dealias_mask)
    return adv


def cancellation_residual(q: SpectralField, dealias: bool = True) -> float:
    """|(u·∇q, q)| relativo a ||u·∇q|| ||q||; nulo exatamente para q filtrado."""
    n = nonlinear_term(q, dealias)
    scale = sobolev_norm(n, 0.0) * sobolev_norm(q, 0.0)
    if scale == 0.0:
        return 0.0
    return abs(n.inner(q)) / scale


class SQGIntegrator:
    """Heun com fator integrante: a parte linear μ = λ^{α/2} + ελ é resolvida exatamente."""

    def __init__(self, cfg: SQGConfig):
        self.cfg = cfg
        self.spectrum = cfg.spectrum
        self.decay = np.exp(-cfg.mu * cfg.dt)
        self.forcing = cfg.effective_forcing.coeffs
        lx, ly = self.spectrum.domain.lx, self.spectrum.domain.ly
        self._cfl_scale = cfg.dt * max(self.spectrum.nx, self.spectrum.ny) / min(lx, ly)

    def rhs(self, coeffs: np.ndarray) -> np.ndarray:
        n = nonlinear_term(SpectralField(self.spectrum, coeffs), self.cfg.dealias)
        return self.forcing - n.coeffs

    def check_cfl(self, state: SQGState) -> None:
        max_u = state.u.max_norm()
        if self._cfl_scale * max_u > self.cfg.cfl:
            raise CFLViolation(max_u, state.t, self.cfg.cfl)

    def step(self, state: SQGState) -> SQGState:
        self.check_cfl(state)
        dt = self.cfg.dt
        q = state.q.coeffs
        k1 = self.rhs(q)
        stage = self.decay * (q + dt * k1)
        if not np.all(np.isfinite(stage)):
            raise DivergenceError(state.t, "estágio intermediário não finito")
        k2 = self.rhs(stage)
        q_new = self.decay * (q + 0.5 * dt * k1) + 0.5 * dt * k2
        n = state.step + 1
        if not np.all(np.isfinite(q_new)):
            raise DivergenceError(n * dt)
        return SQGState(n * dt, SpectralField(self.spectrum, q_new), n)

    def stage(self, state: SQGState) -> SpectralField:
        """Estágio q* = E(q + Δt F(q)) do passo a partir de state (usado pela dinâmica tangente)."""
        q = state.q.coeffs
        return SpectralField(self.spectrum, self.decay * (q + self.cfg.dt * self.rhs(q)))

    def diagnostics(self, state: SQGState) -> DiagnosticRecord:
        cfg = self.cfg
        q = state.q
        qn = inverse_transform(q)
        extras = {f"lp_{p:g}": lp_norm(qn, p) for p in cfg.lp_exponents}
        extras.update({f"sobolev_{s:g}": sobolev_norm(q, s) for s in cfg.sobolev_list})
        return DiagnosticRecord(
            t=state.t,
            l2=sobolev_norm(q, 0.0),
            dissipation=sobolev_norm(q, 0.5 * cfg.alpha),
            dual=sobolev_norm(q, -0.5),
            weak_dissipation=sobolev_norm(q, 0.5 * (cfg.alpha - 1.0)),
            gradient=sobolev_norm(q, 1.0),
            forcing_pairing=float(np.sum(self.forcing * q.coeffs)),
            energy_residual=float("nan"),
            cancellation_residual=cancellation_residual(q, cfg.dealias),
            extras=extras,
            dissipation_density=cfg.mu * q.coeffs ** 2,
        )


def step(state: SQGState, cfg: SQGConfig) -> SQGState:
    return SQGIntegrator(cfg).step(state)


def logarithmic_mean(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """(y - x) / ln(y/x), com L(x, x) = x e L(x, 0) = 0."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.zeros(np.broadcast(x, y).shape)
    pos = (x > 0) & (y > 0)
    xp, yp = x[pos], y[pos]
    d = (yp - xp) / xp
    ratio = np.ones_like(d)
    moved = d != 0
    ratio[moved] = d[moved] / np.log1p(d[moved])
    out[pos] = xp * ratio
    return out


def _interval_residual(a: DiagnosticRecord, b: DiagnosticRecord) -> float:
    if a.dissipation_density is None or b.dissipation_density is None:
        raise ValueError("registros sem densidade de dissipação por modo")
    ds = b.t - a.t
    change = (b.l2 ** 2 - a.l2 ** 2) / ds
    # cada modo decai como exponencial entre as amostras: ∫ μq̂² = Δs·L(μq̂_a², μq̂_b²)
    diss = 2.0 * float(np.sum(logarithmic_mean(a.dissipation_density, b.dissipation_density)))
    pairing = a.forcing_pairing + b.forcing_pairing
    return abs(change + diss - pairing)


def energy_balance_residual(records: Sequence[DiagnosticRecord]) -> float:
    """max |Δ||q||²/Δs + (2/Δs)∫(||Λ^{α/2}q||² + ε||Λq||²) - 2(J_ε f, q)| nas janelas entre amostras.

    A dissipação é integrada modo a modo pela média logarítmica, exata para o
    fluxo linear; o pareamento com o forçamento usa o trapézio.
    """
    if len(records) < 2:
        raise ValueError("pelo menos 2 registros exigidos")
    times = np.array([r.t for r in records])
    gaps = np.diff(times)
    if np.any(gaps <= 0) or np.max(np.abs(gaps - gaps[0])) > 1e-9 * gaps[0]:
        raise ValueError("registros com espaçamento não uniforme")
    return max(_interval_residual(a, b) for a, b in zip(records[:-1], records[1:]))


def run(
    cfg: SQGConfig,
    q0: Optional[SpectralField] = None,
    sample_every: int = 1,
    state: Optional[SQGState] = None,
    checkpoint_path: Optional[str] = None,
    progress: bool = False,
) -> RunResult:
    """Integra até T registrando diagnósticos a cada `sample_every` passos.

    Com `state` (vindo de um checkpoint) a integração continua do instante salvo
    com a mesma sequência de passos da execução ininterrupta.
    """
    if sample_every < 1:
        raise ValueError("sample_every ≥ 1 exigido")
    integrator = SQGIntegrator(cfg)
    if state is None:
        if q0 is None:
            raise ValueError("q0 ou state exigido")
        state = SQGState(0.0, cfg.prepare_initial(q0), 0)
    else:
        start = int(round(state.t / cfg.dt))
        state = SQGState(start * cfg.dt, state.q, start)
    total = cfg.n_steps
    if abs(total * cfg.dt - cfg.t_end) > 1e-9 * max(cfg.t_end, 1.0):
        logger.warning("T=%g não é múltiplo de Δt=%g; usando %d passos", cfg.t_end, cfg.dt, total)
    remaining = max(total - state.step, 0)
    logger.info("SQG: α=%g ε=%g N=%dx%d, %d passos a partir de t=%g",
                cfg.alpha, cfg.epsilon, cfg.spectrum.nx, cfg.spectrum.ny, remaining, state.t)

    records = [integrator.diagnostics(state)]
    for _ in tqdm(range(remaining), desc="sqg", disable=not progress):
        state = integrator.step(state)
        if state.step % sample_every == 0 or state.step == total:
            rec = integrator.diagnostics(state)
            rec.energy_residual = _interval_residual(records[-1], rec)
            records.append(rec)
    if checkpoint_path:
        save_checkpoint(checkpoint_path, Checkpoint(state.q, cfg.alpha, cfg.epsilon, state.t))
    return RunResult(records, state)


def final_state(cfg: SQGConfig, q0: SpectralField, progress: bool = False) -> SpectralField:
    return run(cfg, q0, sample_every=max(cfg.n_steps, 1), progress=progress).state.q


# ---------------------------------------------------------------------------
# estudos de convergência

def eps_convergence_study(cfg: SQGConfig, eps_list: Sequence[float], q0: SpectralField) -> pd.DataFrame:
    """||q^ε(T) - q^0(T)|| em L² e em D(Λ^{-1/2}) para cada ε.

    Levanta ConvergenceError (com a tabela) se a diferença em L² não decresce com ε.
    """
    reference = final_state(replace(cfg, epsilon=0.0), q0)
    rows = []
    for eps in eps_list:
        q_eps = reference if eps == 0 else final_state(replace(cfg, epsilon=float(eps)), q0)
        diff = q_eps - reference
        rows.append({"eps": float(eps), "l2_diff": sobolev_norm(diff, 0.0), "dual_diff": sobolev_norm(diff, -0.5)})
    df = pd.DataFrame(rows, columns=EPS_STUDY_COLUMNS).sort_values("eps", ascending=False, ignore_index=True)
    tail = df.loc[df["eps"] > 0, "l2_diff"].to_numpy()
    if np.any(np.diff(tail) >= 0):
        raise ConvergenceError(f"diferenças em ε não decrescem com ε: {tail.tolist()}", df)
    return df


def _at_resolution(cfg: SQGConfig, spectrum: Spectrum) -> SQGConfig:
    return replace(cfg, spectrum=spectrum, forcing=cfg.forcing.resample(spectrum))


def resolution_study(cfg: SQGConfig, nx_list: Sequence[int], q0: SpectralField) -> pd.DataFrame:
    """Compara q_N(T) com q_{2N}(T) nos modos comuns e mede a cauda do mais fino."""
    domain = cfg.spectrum.domain
    rows = []
    for nx in nx_list:
        coarse_sp = build_spectrum(domain, nx)
        fine_sp = build_spectrum(domain, 2 * nx)
        coarse = final_state(_at_resolution(cfg, coarse_sp), q0.resample(coarse_sp))
        fine = final_state(_at_resolution(cfg, fine_sp), q0.resample(fine_sp))
        common = fine.resample(coarse_sp)
        tail = fine - common.resample(fine_sp)
        rows.append({
            "nx": nx,
            "nx_fine": 2 * nx,
            "common_diff": sobolev_norm(coarse - common, 0.0),
            "tail_norm": sobolev_norm(tail, 0.0),
        })
    return pd.DataFrame(rows, columns=RESOLUTION_STUDY_COLUMNS)


def timestep_study(cfg: SQGConfig, dt_list: Sequence[float], q0: SpectralField) -> pd.DataFrame:
    """Auto-convergência de Richardson: ||q_Δt(T) - q_{Δt'}(T)|| e ordem observada."""
    dts = sorted((float(d) for d in dt_list), reverse=True)
    finals = [final_state(replace(cfg, dt=d), q0) for d in dts]
    diffs = [sobolev_norm(a - b, 0.0) for a, b in zip(finals[:-1], finals[1:])] + [float("nan")]
    rows = []
    for i, d in enumerate(dts):
        order = float("nan")
        if i + 2 < len(dts) and diffs[i + 1] > 0:
            order = math.log(diffs[i] / diffs[i + 1]) / math.log(dts[i] / dts[i + 1])
        rows.append({"dt": d, "l2_final": sobolev_norm(finals[i], 0.0), "diff_to_next": diffs[i], "observed_order": order})
    return pd.DataFrame(rows, columns=TIMESTEP_STUDY_COLUMNS)
