from __future__ import annotations
import argparse
import json
import os

import pandas as pd


def parse_args():
    ap = argparse.ArgumentParser(description="Agrega margens e diagnósticos em tabelas para o relatório")
    ap.add_argument("--verify_dir", required=True, help="Diretório de saída de `verify` (margins.csv)")
    ap.add_argument("--simulate_dir", default=None, help="Diretório de saída de `simulate` (diagnostics.csv), opcional")
    ap.add_argument("--attractor_dir", default=None, help="Diretório de saída de `attractor` (volume.csv), opcional")
    ap.add_argument("--outdir", required=True, help="Diretório de saída para métricas")
    return ap.parse_args()


def margin_tables(margins: pd.DataFrame) -> dict:
    # verdict chega como texto quando o CSV é relido
    margins = margins.copy()
    margins["verdict"] = margins["verdict"].astype(str).str.lower().isin(["true", "1"])
    by_check = margins.groupby("check_id").agg(
        relatorios=("verdict", "size"),
        falhas=("verdict", lambda v: int((~v).sum())),
        pior_margem=("margin", "min"),
        maior_margem=("margin", "max"),
        maior_constante=("empirical_constant", "max"),
    ).reset_index()
    by_params = margins.groupby(["check_id", "params"], dropna=False).agg(
        sementes=("seed", "nunique"),
        pior_margem=("margin", "min"),
        constante_media=("empirical_constant", "mean"),
    ).reset_index()
    failures = margins.loc[~margins["verdict"], ["check_id", "params", "lhs", "rhs", "margin", "tol", "seed", "note"]]
    return {"by_check": by_check, "by_params": by_params, "failures": failures}


def diagnostic_tables(diag: pd.DataFrame) -> dict:
    summary = pd.DataFrame([{
        "t_final": float(diag["t"].iloc[-1]),
        "l2_inicial": float(diag["l2"].iloc[0]),
        "l2_final": float(diag["l2"].iloc[-1]),
        "l2_max": float(diag["l2"].max()),
        "residuo_energia_max": float(diag["energy_residual"].max()),
        "residuo_cancelamento_max": float(diag["cancellation_residual"].max()),
    }])
    return {"diagnostics_summary": summary}


def volume_tables(volume: pd.DataFrame) -> dict:
    rates = volume.groupby(["amplitude", "n"]).agg(
        taxa=("rate", "first"),
        traco_medio=("trace", "mean"),
        log_volume_final=("log_volume", "last"),
    ).reset_index()
    return {"volume_rates": rates}


def main():
    args = parse_args()
    os.makedirs(args.outdir, exist_ok=True)
    tables = margin_tables(pd.read_csv(os.path.join(args.verify_dir, "margins.csv")))
    if args.simulate_dir:
        tables.update(diagnostic_tables(pd.read_csv(os.path.join(args.simulate_dir, "diagnostics.csv"))))
    if args.attractor_dir:
        tables.update(volume_tables(pd.read_csv(os.path.join(args.attractor_dir, "volume.csv"))))
        dim_path = os.path.join(args.attractor_dir, "dimension.json")
        if os.path.exists(dim_path):
            with open(dim_path, "r", encoding="utf-8") as f:
                dims = json.load(f)["amplitudes"]
            tables["dimension"] = pd.DataFrame([
                {"amplitude": amp, "n0": d["n0"], "status": d["status"], "expoente": d["exponent"], "consistente": d["consistent"]}
                for amp, d in dims.items()
            ])

    for name, df in tables.items():
        df.to_parquet(os.path.join(args.outdir, f"{name}.parquet"), index=False)

    summary = tables["by_check"]
    summary.to_json(os.path.join(args.outdir, "by_check.json"), orient="records", force_ascii=False)

    print("[OK] Métricas geradas em:", args.outdir)


if __name__ == "__main__":
    main()
