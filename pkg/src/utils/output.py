from __future__ import annotations
import json
import logging
import math
import os
from datetime import datetime, timezone
from typing import Any, Iterable, Optional

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"


def write_csv(df: pd.DataFrame, path: str, float_digits: int = 17) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    df.to_csv(path, index=False, float_format=f"%.{float_digits}g")
    logger.info("CSV salvo em %s (%d linhas)", path, len(df))
    return path


def to_builtin(obj: Any) -> Any:
    """Converte tipos numpy/pandas para tipos nativos; NaN e ±inf viram null."""
    if isinstance(obj, dict):
        return {str(k): to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_builtin(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_builtin(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def write_json(obj: Any, path: str) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    # json usa repr(float): 17 dígitos significativos quando necessário
    with open(path, "w", encoding="utf-8") as f:
        json.dump(to_builtin(obj), f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")
    return path


def write_manifest(
    out_dir: str,
    command: str,
    status: str,
    artifacts: Iterable[str],
    error: Optional[str] = None,
    partial: bool = False,
) -> str:
    """Único artefato com carimbo de tempo."""
    manifest = {
        "command": command,
        "status": status,
        "partial": bool(partial),
        "error": error,
        "artifacts": sorted(os.path.relpath(a, out_dir) for a in artifacts),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    return write_json(manifest, os.path.join(out_dir, MANIFEST))
