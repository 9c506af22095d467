from __future__ import annotations
import os
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.errors import ConfigError

COMMANDS = ("verify", "simulate", "attractor", "convergence")

CHECK_IDS = (
    "cordoba",
    "cordoba_identity",
    "nonnegativity",
    "poincare",
    "power_domain",
    "product",
    "trilinear",
    "interpolation",
    "adjoint_shift",
    "gradient_identity",
    "mollifier",
    "kernel",
)

TOLERANCE_DEFAULTS: Dict[str, float] = {
    "cordoba": 1e-6,
    "cordoba_identity": 1e-8,
    "nonnegativity": 1e-8,
    "poincare": 1e-8,
    "interpolation": 1e-13,
    "adjoint_shift": 1e-13,
    "commutation": 1e-13,
    "strong_type": 2.05,
    "power_growth": 1.1,
    "kernel_representation": 0.02,
    "gradient_identity": 1e-8,
    "refinement": 0.2,
}

FIELD_KINDS = ("zero", "single-mode", "random-band-limited", "bump", "signed-bump")


# ---------------------------------------------------------------------------
# configurações globais (config/settings.yaml)

@dataclass
class Settings:
    output_dir: str = "reports/output"
    float_digits: int = 17
    threads: int = 1
    threads_env: str = "FRACLAB_THREADS"
    progress: bool = True
    tolerances: Dict[str, float] = field(default_factory=lambda: dict(TOLERANCE_DEFAULTS))


def load_settings(path: str = os.path.join("config", "settings.yaml")) -> Settings:
    if not os.path.exists(path):
        return Settings()
    with open(path, "r", encoding="utf-8") as f:
        y = yaml.safe_load(f) or {}
    output = y.get("output", {})
    runtime = y.get("runtime", {})
    tolerances = dict(TOLERANCE_DEFAULTS)
    tolerances.update({k: float(v) for k, v in (y.get("tolerances") or {}).items()})
    return Settings(
        output_dir=str(output.get("dir", "reports/output")),
        float_digits=int(output.get("float_digits", 17)),
        threads=int(runtime.get("threads", 1)),
        threads_env=str(runtime.get("threads_env", "FRACLAB_THREADS")),
        progress=bool(runtime.get("progress", True)),
        tolerances=tolerances,
    )


# ---------------------------------------------------------------------------
# documento de execução (modo estrito)

class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class FieldSpec(_Strict):
    kind: Literal["zero", "single-mode", "random-band-limited", "bump", "signed-bump"] = "zero"
    amplitude: float = 1.0
    band: int = Field(8, ge=1)
    modes: List[Tuple[int, int]] = Field(default_factory=lambda: [(1, 1)])
    seed: int = 0

    @field_validator("modes")
    @classmethod
    def _positive_modes(cls, v):
        for j, k in v:
            if j < 1 or k < 1:
                raise ValueError("modos (j,k) com j,k ≥ 1")
        return v


class VerifyOptions(_Strict):
    seeds: int = Field(3, ge=1)
    nx_fine: Optional[int] = Field(None, ge=1)
    checks: Optional[List[str]] = None

    @field_validator("checks")
    @classmethod
    def _known_checks(cls, v):
        if v is not None:
            unknown = sorted(set(v) - set(CHECK_IDS))
            if unknown:
                raise ValueError(f"verificações desconhecidas: {unknown}")
        return v


class AttractorOptions(_Strict):
    n_list: List[int] = Field(default_factory=lambda: [1, 2, 4, 8, 16])
    orth_every: int = Field(10, ge=1)
    spinup: float = Field(0.0, ge=0)
    t_window: float = Field(1.0, gt=0)
    bundle: Literal["eigen", "random"] = "eigen"
    amplitudes: List[float] = Field(default_factory=lambda: [1.0])
    ball_s: Optional[float] = None
    ball_scales: List[float] = Field(default_factory=lambda: [1.0, 10.0])

    @field_validator("n_list")
    @classmethod
    def _positive_n(cls, v):
        if not v or min(v) < 1:
            raise ValueError("n_list com valores ≥ 1")
        return v


class ConvergenceOptions(_Strict):
    eps_list: List[float] = Field(default_factory=lambda: [0.1, 0.05, 0.025, 0.0125])
    dt_list: List[float] = Field(default_factory=list)
    nx_list: List[int] = Field(default_factory=list)

    @field_validator("eps_list")
    @classmethod
    def _eps_range(cls, v):
        if any(not 0.0 <= e < 1.0 for e in v):
            raise ValueError("ε ∈ [0,1)")
        return v

    @field_validator("dt_list")
    @classmethod
    def _dt_positive(cls, v):
        if any(d <= 0 for d in v):
            raise ValueError("Δt > 0")
        return v

    @field_validator("nx_list")
    @classmethod
    def _nx_positive(cls, v):
        if any(n < 1 for n in v):
            raise ValueError("Nx ≥ 1")
        return v


class RunConfig(_Strict):
    command: Literal["verify", "simulate", "attractor", "convergence"]
    lx: float = 1.0
    ly: float = 1.0
    nx: int
    ny: Optional[int] = None
    alpha: float = 1.5
    epsilon: float = 0.0
    delta: Optional[float] = None
    dt: float = 1e-3
    t_end: float = 1.0
    cfl: float = 0.5
    dealias: bool = True
    sample_every: int = 10
    seed: int = 0
    out_dir: Optional[str] = None
    resume: Optional[str] = None
    lp_list: List[float] = Field(default_factory=list)
    sobolev_list: List[float] = Field(default_factory=list)
    forcing: FieldSpec = Field(default_factory=FieldSpec)
    initial: FieldSpec = Field(default_factory=lambda: FieldSpec(kind="random-band-limited"))
    verify: VerifyOptions = Field(default_factory=VerifyOptions)
    attractor: AttractorOptions = Field(default_factory=AttractorOptions)
    convergence: ConvergenceOptions = Field(default_factory=ConvergenceOptions)
    tolerances: Dict[str, float] = Field(default_factory=dict)

    @field_validator("lx", "ly")
    @classmethod
    def _positive_length(cls, v):
        if not v > 0:
            raise ValueError("Lx > 0 e Ly > 0")
        return v

    @field_validator("nx", "ny")
    @classmethod
    def _positive_modes(cls, v):
        if v is not None and v < 1:
            raise ValueError("Nx, Ny ≥ 1")
        return v

    @field_validator("alpha")
    @classmethod
    def _alpha_range(cls, v):
        if not 1.0 < v < 2.0:
            raise ValueError("α ∈ (1,2)")
        return v

    @field_validator("epsilon")
    @classmethod
    def _epsilon_range(cls, v):
        if not 0.0 <= v < 1.0:
            raise ValueError("ε ∈ [0,1)")
        return v

    @field_validator("dt")
    @classmethod
    def _dt_positive(cls, v):
        if not v > 0:
            raise ValueError("Δt > 0")
        return v

    @field_validator("t_end")
    @classmethod
    def _t_end(cls, v):
        if v < 0:
            raise ValueError("T ≥ 0")
        return v

    @field_validator("cfl")
    @classmethod
    def _cfl(cls, v):
        if not v > 0:
            raise ValueError("CFL > 0")
        return v

    @field_validator("sample_every")
    @classmethod
    def _sample_every(cls, v):
        if v < 1:
            raise ValueError("sample_every ≥ 1")
        return v

    @field_validator("lp_list")
    @classmethod
    def _lp(cls, v):
        if any(p < 1 for p in v):
            raise ValueError("p ≥ 1")
        return v

    @field_validator("tolerances")
    @classmethod
    def _known_tolerances(cls, v):
        unknown = sorted(set(v) - set(TOLERANCE_DEFAULTS))
        if unknown:
            raise ValueError(f"tolerâncias desconhecidas: {unknown}")
        return v

    @model_validator(mode="after")
    def _cross_checks(self):
        if self.ny is None:
            self.ny = self.nx
        if self.delta is None:
            self.delta = 0.25 * (self.alpha - 1.0)
        elif not 0.0 < self.delta < 0.5 * (self.alpha - 1.0):
            raise ValueError("δ ∈ (0, (α-1)/2)")
        for name in ("forcing", "initial"):
            outside = [(j, k) for j, k in getattr(self, name).modes if j > self.nx or k > self.ny]
            if outside:
                raise ValueError(f"{name}.modes fora do espectro {self.nx}x{self.ny}: {outside}")
        if max(self.attractor.n_list) > self.nx * self.ny:
            raise ValueError("n_list ≤ Nx·Ny")
        if self.attractor.ball_s is not None and not 1.0 < self.attractor.ball_s < 0.5 * (self.alpha + 1.0):
            raise ValueError("s ∈ (1, (α+1)/2) para a bola absorvente")
        return self


def _format_error(err: dict) -> str:
    loc = ".".join(str(p) for p in err.get("loc", ())) or "<raiz>"
    kind = err.get("type", "")
    if kind == "extra_forbidden":
        return f"chave desconhecida (modo estrito): {loc}"
    if kind == "missing":
        return f"chave obrigatória ausente: {loc}"
    msg = str(err.get("msg", ""))
    if msg.startswith("Value error, "):
        msg = msg[len("Value error, "):]
    return f"{loc}: {msg}"


def parse_config(text: str) -> RunConfig:
    """Lê e valida um documento YAML de execução; qualquer violação vira ConfigError."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"YAML malformado: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("o documento de configuração deve ser um mapeamento chave-valor")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError("; ".join(_format_error(e) for e in exc.errors())) from exc


def load_run_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        raise ConfigError(f"não foi possível ler {path}: {exc}") from exc
    return parse_config(text)
