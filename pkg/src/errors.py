from __future__ import annotations
from typing import Optional


class FraclabError(Exception):
    """Erro base do pacote; `dispatch` converte em status de saída não nulo."""


class ConfigError(FraclabError, ValueError):
    pass


class CFLViolation(FraclabError):
    def __init__(self, max_u: float, t: float, limit: float):
        self.max_u = float(max_u)
        self.t = float(t)
        self.limit = float(limit)
        super().__init__(f"CFL violado em t={self.t:.6g}: max|u|={self.max_u:.6g} (limite {self.limit:g})")


class DivergenceError(FraclabError):
    def __init__(self, t: float, detail: str = "coeficiente não finito"):
        self.t = float(t)
        super().__init__(f"Divergência em t={self.t:.6g}: {detail}")


class DegenerateBundleError(FraclabError):
    def __init__(self, index: int, normalizer: float, partial_trace: Optional[object] = None):
        self.index = int(index)
        self.normalizer = float(normalizer)
        # VolumeTrace parcial (se disponível) para o relatório de falha
        self.partial_trace = partial_trace
        super().__init__(f"Feixe tangente degenerado no campo {self.index} (normalizador {self.normalizer:.3e})")


class CheckpointError(FraclabError):
    pass


class ConvergenceError(FraclabError):
    def __init__(self, message: str, table: Optional[object] = None):
        # tabela do estudo (DataFrame) para gravação parcial
        self.table = table
        super().__init__(message)
