from __future__ import annotations

from pathlib import Path

import pytest

from src.config import TOLERANCE_DEFAULTS, load_run_config, load_settings, parse_config
from src.errors import ConfigError

RUNS_DIR = Path(__file__).resolve().parents[1] / "config" / "runs"

MINIMAL = """
command: simulate
nx: 16
alpha: 1.4
"""


def test_minimal_document_gets_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.command == "simulate"
    assert cfg.ny == 16
    assert cfg.delta == pytest.approx(0.25 * 0.4)
    assert cfg.epsilon == 0.0 and cfg.dealias
    assert cfg.initial.kind == "random-band-limited"
    assert cfg.forcing.kind == "zero"
    assert cfg.attractor.n_list == [1, 2, 4, 8, 16]


def test_nested_sections_are_parsed():
    cfg = parse_config(MINIMAL + """
forcing:
  kind: single-mode
  amplitude: 5
  modes: [[1, 1], [2, 1]]
verify:
  seeds: 2
  checks: [interpolation, adjoint_shift]
tolerances:
  cordoba: 1.0e-5
""")
    assert cfg.forcing.modes == [(1, 1), (2, 1)]
    assert cfg.verify.checks == ["interpolation", "adjoint_shift"]
    assert cfg.tolerances == {"cordoba": 1e-5}


@pytest.mark.parametrize(
    "text, message",
    [
        (MINIMAL + "viscosity: 0.1\n", "chave desconhecida (modo estrito): viscosity"),
        ("command: simulate\nalpha: 1.5\n", "chave obrigatória ausente: nx"),
        ("command: simulate\nnx: 8\nalpha: 2.0\n", "alpha: α ∈ (1,2)"),
        ("command: simulate\nnx: 8\nepsilon: 1.0\n", "epsilon: ε ∈ [0,1)"),
        ("command: simulate\nnx: 8\nalpha: 1.5\ndelta: 0.3\n", "δ ∈ (0, (α-1)/2)"),
        ("command: attractor\nnx: 2\nattractor:\n  n_list: [1, 8]\n", "n_list ≤ Nx·Ny"),
        (MINIMAL + "verify:\n  checks: [cordoba, magic]\n", "verificações desconhecidas"),
        (MINIMAL + "tolerances:\n  bogus: 1.0\n", "tolerâncias desconhecidas"),
        (MINIMAL + "initial:\n  kind: gaussian\n", "initial.kind"),
        ("command: simulate\nnx: 4\nny: 3\nforcing:\n  kind: single-mode\n  modes: [[1, 1], [2, 4]]\n",
         "forcing.modes fora do espectro 4x3: [(2, 4)]"),
        ("command: simulate\nnx: 4\ninitial:\n  kind: single-mode\n  modes: [[5, 1]]\n", "initial.modes fora do espectro 4x4"),
    ],
)
def test_invalid_documents_name_the_problem(text, message):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert message in str(info.value)


def test_malformed_and_non_mapping_documents():
    with pytest.raises(ConfigError, match="YAML malformado"):
        parse_config("command: [simulate\n")
    with pytest.raises(ConfigError, match="mapeamento"):
        parse_config("- simulate\n- 16\n")


def test_load_run_config_from_file(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(MINIMAL, encoding="utf-8")
    assert load_run_config(str(path)).nx == 16
    with pytest.raises(ConfigError):
        load_run_config(str(tmp_path / "missing.yaml"))


def test_shipped_run_documents_are_valid():
    for name in ("verify", "simulate", "attractor", "convergence"):
        cfg = load_run_config(str(RUNS_DIR / f"{name}.yaml"))
        assert cfg.command == name


def test_settings_defaults_and_overrides(tmp_path):
    default = load_settings(str(tmp_path / "absent.yaml"))
    assert default.output_dir == "reports/output"
    assert default.tolerances == TOLERANCE_DEFAULTS
    path = tmp_path / "settings.yaml"
    path.write_text("output:\n  dir: out\nruntime:\n  threads: 4\ntolerances:\n  kernel_representation: 0.05\n", encoding="utf-8")
    settings = load_settings(str(path))
    assert settings.output_dir == "out" and settings.threads == 4
    assert settings.tolerances["kernel_representation"] == 0.05
    assert settings.tolerances["cordoba"] == TOLERANCE_DEFAULTS["cordoba"]
