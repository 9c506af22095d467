from __future__ import annotations

import numpy as np
import pytest

from src.domain import SpectralField
from src.errors import CheckpointError
from src.utils.checkpoint import (
    HEADER,
    MAGIC,
    Checkpoint,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    save_checkpoint,
)


@pytest.fixture
def ckpt(sp_rect, rng):
    q = SpectralField(sp_rect, rng.standard_normal(sp_rect.shape))
    return Checkpoint(q, alpha=1.4, epsilon=0.05, t=0.125)


def test_header_layout():
    assert HEADER.itemsize == 64


def test_encode_decode_preserves_state(ckpt):
    data = encode_checkpoint(ckpt)
    assert data[:4] == MAGIC
    assert len(data) == 64 + 8 * 12 * 10
    back = decode_checkpoint(data)
    assert back.q.spectrum == ckpt.q.spectrum
    assert np.array_equal(back.q.coeffs, ckpt.q.coeffs)
    assert (back.alpha, back.epsilon, back.t) == (1.4, 0.05, 0.125)
    assert encode_checkpoint(back) == data


def test_save_and_load(tmp_path, ckpt):
    path = save_checkpoint(str(tmp_path / "sub" / "run.fsqg"), ckpt)
    back = load_checkpoint(path)
    assert np.array_equal(back.q.coeffs, ckpt.q.coeffs)
    with pytest.raises(CheckpointError):
        load_checkpoint(str(tmp_path / "missing.fsqg"))


def test_corrupt_inputs_are_rejected(ckpt):
    data = encode_checkpoint(ckpt)
    with pytest.raises(CheckpointError, match="truncado"):
        decode_checkpoint(data[:10])
    with pytest.raises(CheckpointError, match="assinatura"):
        decode_checkpoint(b"XXXX" + data[4:])
    bumped = bytearray(data)
    bumped[4] = 2
    with pytest.raises(CheckpointError, match="versão"):
        decode_checkpoint(bytes(bumped))
    with pytest.raises(CheckpointError, match="tamanho"):
        decode_checkpoint(data[:-8])
