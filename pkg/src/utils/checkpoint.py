from __future__ import annotations
import logging
import os
from dataclasses import dataclass

import numpy as np

from src.domain import RectDomain, SpectralField, build_spectrum
from src.errors import CheckpointError

logger = logging.getLogger(__name__)

MAGIC = b"FSQG"
VERSION = 1

# cabeçalho little-endian sem alinhamento: 4 + 4 + 2*8 + 5*8 = 64 bytes
HEADER = np.dtype([
    ("magic", "S4"),
    ("version", "<u4"),
    ("nx", "<i8"),
    ("ny", "<i8"),
    ("lx", "<f8"),
    ("ly", "<f8"),
    ("alpha", "<f8"),
    ("epsilon", "<f8"),
    ("t", "<f8"),
])


@dataclass(frozen=True, eq=False)
class Checkpoint:
    q: SpectralField
    alpha: float
    epsilon: float
    t: float


def encode_checkpoint(ckpt: Checkpoint) -> bytes:
    sp = ckpt.q.spectrum
    header = np.zeros(1, dtype=HEADER)
    header[0] = (MAGIC, VERSION, sp.nx, sp.ny, sp.domain.lx, sp.domain.ly, ckpt.alpha, ckpt.epsilon, ckpt.t)
    body = np.ascontiguousarray(ckpt.q.coeffs, dtype="<f8")
    return header.tobytes() + body.tobytes()


def decode_checkpoint(data: bytes) -> Checkpoint:
    if len(data) < HEADER.itemsize:
        raise CheckpointError(f"arquivo truncado: {len(data)} bytes, cabeçalho exige {HEADER.itemsize}")
    header = np.frombuffer(data, dtype=HEADER, count=1)[0]
    if bytes(header["magic"]) != MAGIC:
        raise CheckpointError(f"assinatura inválida: {bytes(header['magic'])!r}")
    if int(header["version"]) != VERSION:
        raise CheckpointError(f"versão não suportada: {int(header['version'])}")
    nx, ny = int(header["nx"]), int(header["ny"])
    expected = HEADER.itemsize + 8 * nx * ny
    if nx < 1 or ny < 1 or len(data) != expected:
        raise CheckpointError(f"tamanho inconsistente: {len(data)} bytes, esperado {expected}")
    try:
        spectrum = build_spectrum(RectDomain(float(header["lx"]), float(header["ly"])), nx, ny)
    except ValueError as exc:
        raise CheckpointError(str(exc)) from exc
    coeffs = np.frombuffer(data, dtype="<f8", offset=HEADER.itemsize).reshape(nx, ny).astype(float)
    return Checkpoint(SpectralField(spectrum, coeffs), float(header["alpha"]), float(header["epsilon"]), float(header["t"]))


def save_checkpoint(path: str, ckpt: Checkpoint) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "wb") as f:
        f.write(encode_checkpoint(ckpt))
    logger.info("Checkpoint gravado em %s (t=%.6g)", path, ckpt.t)
    return path


def load_checkpoint(path: str) -> Checkpoint:
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as exc:
        raise CheckpointError(f"não foi possível ler {path}: {exc}") from exc
    return decode_checkpoint(data)
