from __future__ import annotations

import json

import pandas as pd
import pytest

from src.config import CHECK_IDS, Settings, parse_config
from src.errors import ConvergenceError
from src.main import main, resolve_threads
from src.pipeline import (
    CHECK_REGISTRY,
    build_field,
    build_sqg_config,
    dispatch,
    merged_tolerances,
    run_suite,
    summarize_margins,
)
from src.schemas import MARGIN_COLUMNS


@pytest.fixture
def settings(tmp_path):
    return Settings(output_dir=str(tmp_path), progress=False)


def _read_manifest(out_dir):
    with open(out_dir / "manifest.json", "r", encoding="utf-8") as f:
        return json.load(f)


def test_every_check_id_is_registered():
    assert set(CHECK_REGISTRY) == set(CHECK_IDS)


def test_run_suite_and_summary(sp8):
    margins = run_suite(["interpolation", "adjoint_shift", "unknown"], [0, 1], sp8)
    assert list(margins.columns) == list(MARGIN_COLUMNS)
    assert set(margins["check_id"]) == {"interpolation", "adjoint_shift"}
    assert set(margins["seed"]) == {0, 1}
    summary = summarize_margins(margins)
    assert summary["failures"] == 0
    assert summary["total"] == summary["passed"] == len(margins)
    assert set(summary["checks"]) == {"interpolation", "adjoint_shift"}


def test_summary_counts_failures():
    margins = pd.DataFrame({
        "check_id": ["a", "a", "b"],
        "verdict": [True, False, True],
        "empirical_constant": [1.0, 2.5, float("nan")],
    })
    summary = summarize_margins(margins)
    assert summary["failures"] == 1 and summary["passed"] == 2
    assert summary["checks"]["a"]["max_empirical_constant"] == 2.5
    assert summary["checks"]["b"]["max_empirical_constant"] is None


def test_build_field_and_sqg_config():
    cfg = parse_config("""
command: simulate
nx: 8
alpha: 1.6
forcing:
  kind: single-mode
  amplitude: 3
  modes: [[1, 1], [2, 1]]
""")
    sqg_cfg = build_sqg_config(cfg)
    assert sqg_cfg.spectrum.shape == (8, 8)
    assert sqg_cfg.delta == pytest.approx(0.15)
    forcing = build_field(sqg_cfg.spectrum, cfg.forcing)
    assert forcing.coeffs[0, 0] == 3.0 and forcing.coeffs[1, 0] == 3.0
    assert abs(forcing.coeffs).sum() == 6.0


def test_document_tolerances_override_settings(settings):
    cfg = parse_config("command: verify\nnx: 8\ntolerances:\n  cordoba: 1.0e-3\n")
    merged = merged_tolerances(cfg, settings)
    assert merged["cordoba"] == 1e-3
    assert merged["interpolation"] == settings.tolerances["interpolation"]


def test_dispatch_verify_writes_artifacts(tmp_path, settings):
    cfg = parse_config("""
command: verify
nx: 8
verify:
  seeds: 2
  checks: [interpolation, adjoint_shift, gradient_identity]
""")
    out = tmp_path / "verify"
    assert dispatch(cfg, settings, str(out)) == 0
    manifest = _read_manifest(out)
    assert manifest["status"] == "ok" and not manifest["partial"]
    assert manifest["artifacts"] == ["margins.csv", "summary.json"]
    margins = pd.read_csv(out / "margins.csv")
    assert set(margins["check_id"]) == {"interpolation", "adjoint_shift", "gradient_identity"}


def test_dispatch_simulate_cfl_violation_is_partial(tmp_path, settings):
    cfg = parse_config("""
command: simulate
nx: 8
dt: 1.0e-3
t_end: 0.01
cfl: 1.0e-9
initial:
  kind: single-mode
  amplitude: 1.0
""")
    out = tmp_path / "simulate"
    assert dispatch(cfg, settings, str(out)) == 1
    manifest = _read_manifest(out)
    assert manifest["status"] == "failed" and manifest["partial"]
    assert manifest["error"]


def test_dispatch_simulate_writes_diagnostics(tmp_path, settings):
    cfg = parse_config("""
command: simulate
nx: 8
dt: 1.0e-3
t_end: 0.01
sample_every: 5
initial:
  kind: random-band-limited
  band: 4
forcing:
  kind: single-mode
  amplitude: 5.0
""")
    out = tmp_path / "simulate"
    assert dispatch(cfg, settings, str(out)) == 0
    diag = pd.read_csv(out / "diagnostics.csv")
    assert list(diag["t"]) == pytest.approx([0.0, 0.005, 0.01])
    assert (out / "checkpoint.fsqg").exists()
    assert _read_manifest(out)["status"] == "ok"


def test_dispatch_convergence_keeps_partial_eps_table(tmp_path, settings, monkeypatch):
    table = pd.DataFrame({"eps": [0.1, 0.05], "l2_diff": [0.1, 0.2], "dual_diff": [0.05, 0.1]})

    def failing_study(cfg, eps_list, q0):
        raise ConvergenceError("diferenças em ε não decrescem com ε", table)

    monkeypatch.setattr("src.pipeline.eps_convergence_study", failing_study)
    cfg = parse_config("""
command: convergence
nx: 8
convergence:
  eps_list: [0.1, 0.05]
""")
    out = tmp_path / "convergence"
    assert dispatch(cfg, settings, str(out)) == 1
    manifest = _read_manifest(out)
    assert manifest["status"] == "failed" and manifest["partial"]
    assert manifest["artifacts"] == ["eps_study.csv"]
    assert list(pd.read_csv(out / "eps_study.csv")["eps"]) == [0.1, 0.05]

def test_resolve_threads_precedence(monkeypatch):
    settings = Settings(threads=3)
    monkeypatch.delenv(settings.threads_env, raising=False)
    assert resolve_threads(None, settings) == 3
    monkeypatch.setenv(settings.threads_env, "5")
    assert resolve_threads(None, settings) == 5
    assert resolve_threads(2, settings) == 2


def test_main_exit_codes(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("command: verify\nnx: 8\nalpha: 3.0\n", encoding="utf-8")
    common = ["--settings", str(tmp_path / "absent.yaml"), "--out", str(tmp_path / "out")]
    assert main(["verify", "--config", str(bad)] + common) == 2
    assert main(["simulate", "--config", str(bad)] + common) == 2
    good = tmp_path / "good.yaml"
    good.write_text("command: verify\nnx: 8\nverify:\n  seeds: 1\n  checks: [interpolation]\n", encoding="utf-8")
    assert main(["verify", "--config", str(good), "--seed", "7"] + common) == 0
    margins = pd.read_csv(tmp_path / "out" / "margins.csv")
    assert set(margins["seed"]) == {7}
