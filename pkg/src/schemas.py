from __future__ import annotations
from dataclasses import dataclass
from typing import List

# Colunas fixas dos CSVs gravados pelo pacote.
# Uma linha por relatório de margem (verify), por amostra de diagnóstico (simulate),
# por instante e posto N (attractor) e por entrada dos estudos (convergence).


@dataclass
class MarginColumns:
    check_id: str = "check_id"            # ex.: cordoba, poincare, product_v2
    params: str = "params"                # "p=4;s=0.5"
    lhs: str = "lhs"
    rhs: str = "rhs"
    margin: str = "margin"                # LHS - RHS ou LHS / RHS conforme kind
    kind: str = "kind"
    verdict: str = "verdict"
    tol: str = "tol"
    rhs_terms: str = "rhs_terms"
    empirical_constant: str = "empirical_constant"
    resolution: str = "resolution"        # modos por direção
    seed: str = "seed"
    note: str = "note"


MARGIN_COLUMNS: List[str] = [
    MarginColumns.check_id,
    MarginColumns.params,
    MarginColumns.lhs,
    MarginColumns.rhs,
    MarginColumns.margin,
    MarginColumns.kind,
    MarginColumns.verdict,
    MarginColumns.tol,
    MarginColumns.rhs_terms,
    MarginColumns.empirical_constant,
    MarginColumns.resolution,
    MarginColumns.seed,
    MarginColumns.note,
]


@dataclass
class DiagnosticColumns:
    t: str = "t"
    l2: str = "l2"                        # ||q||_L2
    dissipation: str = "dissipation"      # ||Λ^{α/2} q||
    dual: str = "dual"                    # ||Λ^{-1/2} q||
    weak_dissipation: str = "weak_dissipation"  # ||Λ^{(α-1)/2} q||
    gradient: str = "gradient"            # ||Λ q||
    forcing_pairing: str = "forcing_pairing"    # (J_ε f, q)
    energy_residual: str = "energy_residual"
    cancellation_residual: str = "cancellation_residual"


# colunas ||q||_Lp e ||Λ^s q|| são acrescentadas por configuração (lp_<p>, sobolev_<s>)
DIAGNOSTIC_COLUMNS: List[str] = [
    DiagnosticColumns.t,
    DiagnosticColumns.l2,
    DiagnosticColumns.dissipation,
    DiagnosticColumns.dual,
    DiagnosticColumns.weak_dissipation,
    DiagnosticColumns.gradient,
    DiagnosticColumns.forcing_pairing,
    DiagnosticColumns.energy_residual,
    DiagnosticColumns.cancellation_residual,
]

VOLUME_COLUMNS: List[str] = ["amplitude", "n", "t", "log_volume", "trace", "rate"]

EPS_STUDY_COLUMNS: List[str] = ["eps", "l2_diff", "dual_diff"]

RESOLUTION_STUDY_COLUMNS: List[str] = ["nx", "nx_fine", "common_diff", "tail_norm"]

TIMESTEP_STUDY_COLUMNS: List[str] = ["dt", "l2_final", "diff_to_next", "observed_order"]
