from __future__ import annotations
import logging
import os
from dataclasses import replace
from typing import Callable, Dict, Iterable, List, Optional, Type

import pandas as pd
from tqdm import tqdm

from src.attractor import absorbing_ball_experiment, dimension_estimate, volume_decay_run, volume_frame
from src.config import CHECK_IDS, FieldSpec, RunConfig, Settings
from src.domain import RectDomain, SpectralField, Spectrum, build_spectrum
from src.errors import ConfigError, ConvergenceError, FraclabError
from src.ineqlab.base import BaseCheck, make_test_field
from src.ineqlab.cordoba import CordobaCheck, CordobaIdentityCheck, NonnegativityCheck
from src.ineqlab.interpolation import InterpolationCheck
from src.ineqlab.poincare import PoincareCheck, PowerDomainCheck
from src.ineqlab.products import ProductCheck, TrilinearCheck
from src.ineqlab.spectral import AdjointShiftCheck, GradientIdentityCheck, KernelCheck, MollifierCheck
from src.schemas import MARGIN_COLUMNS
from src.sqg import SQGConfig, SQGState, eps_convergence_study, resolution_study, run, timestep_study
from src.utils.checkpoint import load_checkpoint
from src.utils.output import write_csv, write_json, write_manifest

logger = logging.getLogger(__name__)

CHECK_REGISTRY: Dict[str, Type[BaseCheck]] = {
    "cordoba": CordobaCheck,
    "cordoba_identity": CordobaIdentityCheck,
    "nonnegativity": NonnegativityCheck,
    "poincare": PoincareCheck,
    "power_domain": PowerDomainCheck,
    "product": ProductCheck,
    "trilinear": TrilinearCheck,
    "interpolation": InterpolationCheck,
    "adjoint_shift": AdjointShiftCheck,
    "gradient_identity": GradientIdentityCheck,
    "mollifier": MollifierCheck,
    "kernel": KernelCheck,
}

# verificações repetidas na resolução fina (verify.nx_fine)
FINE_CHECKS = ("cordoba", "nonnegativity")


def run_suite(
    check_ids: Iterable[str],
    seeds: Iterable[int],
    spectrum: Spectrum,
    tolerances: Optional[Dict[str, float]] = None,
    progress: bool = False,
) -> pd.DataFrame:
    seeds = list(seeds)
    frames = []
    for check_id in tqdm(list(check_ids), desc="verify", disable=not progress):
        check_cls = CHECK_REGISTRY.get(check_id)
        if check_cls is None:
            logger.warning("Sem verificação cadastrada para %s", check_id)
            continue
        logger.info("Verificação %s (%d sementes, N=%d)", check_id, len(seeds), spectrum.nx)
        frames.append(check_cls(spectrum, tolerances).run_many(seeds))
    frames = [f for f in frames if not f.empty]
    if frames:
        return pd.concat(frames, ignore_index=True)
    return pd.DataFrame(columns=MARGIN_COLUMNS)


def summarize_margins(margins: pd.DataFrame) -> Dict[str, object]:
    verdict = margins["verdict"].astype(bool)
    checks = {}
    for check_id, group in margins.groupby("check_id", sort=True):
        constants = pd.to_numeric(group["empirical_constant"], errors="coerce")
        checks[check_id] = {
            "total": int(len(group)),
            "failures": int((~group["verdict"].astype(bool)).sum()),
            "max_empirical_constant": float(constants.max()) if constants.notna().any() else None,
        }
    return {
        "failures": int((~verdict).sum()),
        "passed": int(verdict.sum()),
        "total": int(len(margins)),
        "checks": checks,
    }


# ---------------------------------------------------------------------------
# montagem a partir do documento de execução

def build_domain_spectrum(cfg: RunConfig, nx: Optional[int] = None) -> Spectrum:
    domain = RectDomain(cfg.lx, cfg.ly)
    if nx is None:
        return build_spectrum(domain, cfg.nx, cfg.ny)
    return build_spectrum(domain, nx)


def build_field(spectrum: Spectrum, spec: FieldSpec) -> SpectralField:
    if spec.kind == "zero":
        return SpectralField.zeros(spectrum)
    if spec.kind == "single-mode":
        total = SpectralField.zeros(spectrum)
        for j, k in spec.modes:
            total = total + SpectralField.mode(spectrum, j, k)
        return total * spec.amplitude
    return make_test_field(spectrum, spec.kind, seed=spec.seed, band=spec.band).field * spec.amplitude


def build_sqg_config(cfg: RunConfig, spectrum: Optional[Spectrum] = None) -> SQGConfig:
    spectrum = build_domain_spectrum(cfg) if spectrum is None else spectrum
    return SQGConfig(
        spectrum=spectrum,
        alpha=cfg.alpha,
        epsilon=cfg.epsilon,
        dt=cfg.dt,
        t_end=cfg.t_end,
        forcing=build_field(spectrum, cfg.forcing),
        delta=cfg.delta,
        cfl=cfg.cfl,
        dealias=cfg.dealias,
        lp_list=tuple(cfg.lp_list),
        sobolev_list=tuple(cfg.sobolev_list),
    )


def merged_tolerances(cfg: RunConfig, settings: Settings) -> Dict[str, float]:
    tolerances = dict(settings.tolerances)
    tolerances.update(cfg.tolerances)
    return tolerances


# ---------------------------------------------------------------------------
# comandos

def run_verify(cfg: RunConfig, settings: Settings, out_dir: str, artifacts: List[str]) -> int:
    spectrum = build_domain_spectrum(cfg)
    seeds = [cfg.seed + i for i in range(cfg.verify.seeds)]
    check_ids = cfg.verify.checks or list(CHECK_IDS)
    tolerances = merged_tolerances(cfg, settings)
    margins = run_suite(check_ids, seeds, spectrum, tolerances, settings.progress)
    fine = [c for c in check_ids if c in FINE_CHECKS]
    if cfg.verify.nx_fine and fine:
        fine_margins = run_suite(fine, seeds, build_domain_spectrum(cfg, cfg.verify.nx_fine), tolerances, settings.progress)
        margins = pd.concat([margins, fine_margins], ignore_index=True)
    artifacts.append(write_csv(margins, os.path.join(out_dir, "margins.csv"), settings.float_digits))
    summary = summarize_margins(margins)
    summary.update({"resolution": spectrum.nx, "resolution_fine": cfg.verify.nx_fine, "seeds": seeds})
    artifacts.append(write_json(summary, os.path.join(out_dir, "summary.json")))
    if summary["failures"]:
        logger.warning("%d de %d relatórios falharam", summary["failures"], summary["total"])
    return 0 if summary["failures"] == 0 else 1


def _resume_state(cfg: RunConfig, sqg_cfg: SQGConfig) -> Optional[SQGState]:
    if not cfg.resume:
        return None
    ckpt = load_checkpoint(cfg.resume)
    if ckpt.q.spectrum != sqg_cfg.spectrum:
        raise ConfigError(f"checkpoint em espectro {ckpt.q.spectrum.shape} incompatível com a configuração")
    if ckpt.alpha != sqg_cfg.alpha or ckpt.epsilon != sqg_cfg.epsilon:
        raise ConfigError("checkpoint com α ou ε diferentes da configuração")
    logger.info("Retomando de %s em t=%.6g", cfg.resume, ckpt.t)
    return SQGState(ckpt.t, ckpt.q)


def run_simulate(cfg: RunConfig, settings: Settings, out_dir: str, artifacts: List[str]) -> int:
    sqg_cfg = build_sqg_config(cfg)
    q0 = build_field(sqg_cfg.spectrum, cfg.initial)
    checkpoint = os.path.join(out_dir, "checkpoint.fsqg")
    result = run(sqg_cfg, q0, cfg.sample_every, state=_resume_state(cfg, sqg_cfg),
                 checkpoint_path=checkpoint, progress=settings.progress)
    artifacts.append(checkpoint)
    artifacts.append(write_csv(result.to_frame(), os.path.join(out_dir, "diagnostics.csv"), settings.float_digits))
    return 0


def run_attractor(cfg: RunConfig, settings: Settings, out_dir: str, artifacts: List[str]) -> int:
    base_cfg = build_sqg_config(cfg)
    opts = cfg.attractor
    q0 = build_field(base_cfg.spectrum, cfg.initial)
    frames = []
    reports = {}
    for amplitude in opts.amplitudes:
        forced = replace(base_cfg, forcing=base_cfg.forcing * amplitude)
        start = forced.prepare_initial(q0)
        if opts.spinup > 0:
            start = run(replace(forced, t_end=opts.spinup), q0, sample_every=max(forced.n_steps, 1),
                        progress=settings.progress).state.q
        window = replace(forced, t_end=opts.t_window)
        traces = volume_decay_run(window, start, opts.n_list, opts.orth_every, opts.bundle, cfg.seed,
                                  progress=settings.progress)
        frames.append(volume_frame(traces, amplitude))
        reports[f"{amplitude:g}"] = dimension_estimate(traces, cfg.alpha).to_dict()
    artifacts.append(write_csv(pd.concat(frames, ignore_index=True), os.path.join(out_dir, "volume.csv"),
                               settings.float_digits))
    n0s = [r["n0"] for r in reports.values()]
    payload: Dict[str, object] = {
        "amplitudes": reports,
        "n0_nondecreasing": all(a is not None and b is not None and a <= b for a, b in zip(n0s[:-1], n0s[1:])),
    }
    if opts.ball_s is not None:
        q0_list = [q0 * scale for scale in opts.ball_scales]
        ball = absorbing_ball_experiment(replace(base_cfg, t_end=opts.t_window), q0_list, opts.ball_s,
                                         sample_every=cfg.sample_every, progress=settings.progress)
        payload["absorbing_ball"] = ball.to_dict()
    artifacts.append(write_json(payload, os.path.join(out_dir, "dimension.json")))
    return 0


def run_convergence(cfg: RunConfig, settings: Settings, out_dir: str, artifacts: List[str]) -> int:
    sqg_cfg = build_sqg_config(cfg)
    q0 = build_field(sqg_cfg.spectrum, cfg.initial)
    opts = cfg.convergence
    if opts.eps_list:
        try:
            eps = eps_convergence_study(sqg_cfg, opts.eps_list, q0)
        except ConvergenceError as exc:
            artifacts.append(write_csv(exc.table, os.path.join(out_dir, "eps_study.csv"), settings.float_digits))
            raise
        artifacts.append(write_csv(eps, os.path.join(out_dir, "eps_study.csv"), settings.float_digits))
    if opts.nx_list:
        res = resolution_study(sqg_cfg, opts.nx_list, q0)
        artifacts.append(write_csv(res, os.path.join(out_dir, "resolution_study.csv"), settings.float_digits))
    if opts.dt_list:
        ts = timestep_study(sqg_cfg, opts.dt_list, q0)
        artifacts.append(write_csv(ts, os.path.join(out_dir, "timestep_study.csv"), settings.float_digits))
    return 0


COMMAND_REGISTRY: Dict[str, Callable[[RunConfig, Settings, str, List[str]], int]] = {
    "verify": run_verify,
    "simulate": run_simulate,
    "attractor": run_attractor,
    "convergence": run_convergence,
}


def dispatch(cfg: RunConfig, settings: Settings, out_dir: Optional[str] = None) -> int:
    """Executa o comando e grava manifest.json; devolve o status de saída."""
    out_dir = out_dir or cfg.out_dir or os.path.join(settings.output_dir, cfg.command)
    os.makedirs(out_dir, exist_ok=True)
    artifacts: List[str] = []
    command = COMMAND_REGISTRY[cfg.command]
    try:
        status = command(cfg, settings, out_dir, artifacts)
    except (FraclabError, ValueError) as exc:
        logger.error("%s falhou: %s", cfg.command, exc)
        write_manifest(out_dir, cfg.command, "failed", artifacts, error=str(exc), partial=True)
        return 1
    write_manifest(out_dir, cfg.command, "ok" if status == 0 else "failed", artifacts,
                   error=None if status == 0 else "verificações com falha")
    return status
