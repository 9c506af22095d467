from __future__ import annotations
import argparse
import logging
import os
import sys

import scipy.fft

from src.config import COMMANDS, load_run_config, load_settings
from src.errors import ConfigError
from src.pipeline import dispatch


def parse_args(argv=None):
    ap = argparse.ArgumentParser(description="Laboratório do Laplaciano fracionário de Dirichlet e do SQG forçado")
    ap.add_argument("command", choices=COMMANDS, help="Comando: verify, simulate, attractor ou convergence")
    ap.add_argument("--config", type=str, required=True, help="Documento YAML da execução (ver config/runs/)")
    ap.add_argument("--out", type=str, default="", help="Diretório de saída. Vazio usa out_dir do documento ou config/settings.yaml")
    ap.add_argument("--seed", type=int, default=None, help="Semente base (sobrepõe a do documento)")
    ap.add_argument("--threads", type=int, default=None, help="Máximo de threads das FFTs (sobrepõe FRACLAB_THREADS)")
    ap.add_argument("--settings", type=str, default=os.path.join("config", "settings.yaml"), help="Configurações globais")
    ap.add_argument("-v", "--verbose", action="store_true", help="Log em nível DEBUG")
    return ap.parse_args(argv)


def resolve_threads(cli_threads, settings) -> int:
    if cli_threads is not None:
        return max(1, cli_threads)
    env = os.environ.get(settings.threads_env, "")
    if env.strip():
        return max(1, int(env))
    return max(1, settings.threads)


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="[%(levelname)s] %(message)s")
    settings = load_settings(args.settings)
    settings.progress = settings.progress and sys.stderr.isatty()

    try:
        cfg = load_run_config(args.config)
    except ConfigError as exc:
        logging.error("Configuração inválida: %s", exc)
        return 2
    if cfg.command != args.command:
        logging.error("Comando %s difere do documento (%s)", args.command, cfg.command)
        return 2
    if args.seed is not None:
        cfg.seed = args.seed
    out_dir = args.out or cfg.out_dir or os.path.join(settings.output_dir, cfg.command)

    with scipy.fft.set_workers(resolve_threads(args.threads, settings)):
        status = dispatch(cfg, settings, out_dir)
    if status == 0:
        print(f"[OK] {cfg.command} concluído; artefatos em: {out_dir}")
    else:
        print(f"[WARN] {cfg.command} terminou com status {status}; ver {os.path.join(out_dir, 'manifest.json')}")
    return status


if __name__ == "__main__":
    sys.exit(main())
