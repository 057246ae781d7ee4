# services/checkpoint.py
"""
Single-file model checkpoints.

Layout: 8 magic bytes, a little-endian uint64 header length, a UTF-8 JSON
header (sorted keys, compact separators), then every parameter array as
raw little-endian IEEE-754 values in parameter order. The header records
each array's name, shape, dtype, offset and byte length plus the SHA-256
of the payload, so truncation and bit rot are detected on load.
"""
import hashlib
import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List

import numpy as np
from pydantic import ValidationError

from core.config import TrainConfig
from core.errors import (CheckpointShapeError, CheckpointVersionError, CorruptCheckpointError,
                         ShapeError)
from data.text import Vocabulary
from models.base import BlankModel
from models.factory import build_model
from models.params import ParameterStore

logger = logging.getLogger(__name__)

MAGIC = b"CLZGCKPT"
FORMAT_VERSION = 1
_LENGTH = struct.Struct("<Q")


@dataclass
class Checkpoint:
    config: TrainConfig
    vocab: Vocabulary
    params: ParameterStore
    step: int = 0
    version: int = FORMAT_VERSION


def _little_endian(dtype: np.dtype) -> np.dtype:
    return np.dtype(dtype).newbyteorder("<")


def encode_checkpoint(ckpt: Checkpoint) -> bytes:
    entries: List[Dict[str, Any]] = []
    chunks: List[bytes] = []
    offset = 0
    for name, array in ckpt.params.items():
        raw = np.ascontiguousarray(array, dtype=_little_endian(array.dtype)).tobytes()
        entries.append({"name": name, "shape": list(array.shape), "dtype": array.dtype.name,
                        "offset": offset, "nbytes": len(raw)})
        chunks.append(raw)
        offset += len(raw)
    payload = b"".join(chunks)
    header = {
        "format_version": ckpt.version,
        "step": ckpt.step,
        "config": ckpt.config.model_dump(mode="json"),
        "vocab": ckpt.vocab.to_dict(),
        "parameters": entries,
        "payload_sha256": hashlib.sha256(payload).hexdigest(),
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    return MAGIC + _LENGTH.pack(len(header_bytes)) + header_bytes + payload


def save_checkpoint(ckpt: Checkpoint, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = encode_checkpoint(ckpt)
    # atomic replace
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)
    logger.info(f"💾 Checkpoint saved: {path} (step {ckpt.step}, {len(data)} bytes)")
    return path


def decode_checkpoint(data: bytes, source: str = "<bytes>") -> Checkpoint:
    prefix = len(MAGIC) + _LENGTH.size
    if len(data) < prefix or not data.startswith(MAGIC):
        raise CorruptCheckpointError(f"{source}: not a checkpoint file")
    (header_len,) = _LENGTH.unpack_from(data, len(MAGIC))
    if len(data) < prefix + header_len:
        raise CorruptCheckpointError(f"{source}: truncated header")
    try:
        header = json.loads(data[prefix:prefix + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CorruptCheckpointError(f"{source}: unreadable header") from e

    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointVersionError(f"{source}: format version {version} is not supported (expected {FORMAT_VERSION})")

    payload = data[prefix + header_len:]
    try:
        entries = header["parameters"]
        expected = sum(int(entry["nbytes"]) for entry in entries)
        digest = header["payload_sha256"]
    except (KeyError, TypeError, ValueError) as e:
        raise CorruptCheckpointError(f"{source}: malformed header") from e
    if len(payload) != expected:
        raise CorruptCheckpointError(f"{source}: payload is {len(payload)} bytes, header promises {expected}")
    if hashlib.sha256(payload).hexdigest() != digest:
        raise CorruptCheckpointError(f"{source}: payload checksum mismatch")

    try:
        config = TrainConfig.model_validate(header["config"])
        vocab = Vocabulary.from_dict(header["vocab"])
    except (KeyError, ValidationError) as e:
        raise CorruptCheckpointError(f"{source}: invalid config or vocabulary in header") from e

    dtypes = {entry["dtype"] for entry in entries}
    if len(dtypes) > 1:
        raise CorruptCheckpointError(f"{source}: mixed parameter dtypes {sorted(dtypes)}")
    store = ParameterStore(dtypes.pop() if dtypes else config.dtype)
    dtype = _little_endian(store.dtype)
    for entry in entries:
        start = int(entry["offset"])
        shape = tuple(entry["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        if count * dtype.itemsize != int(entry["nbytes"]):
            raise CheckpointShapeError(f"{source}: '{entry['name']}' shape {shape} does not match its byte length")
        try:
            array = np.frombuffer(payload, dtype=dtype, count=count, offset=start).reshape(shape)
            store.add(entry["name"], shape)
        except (ShapeError, ValueError) as e:
            raise CheckpointShapeError(f"{source}: bad layout for parameter '{entry['name']}'") from e
        store[entry["name"]] = array.astype(store.dtype)

    ckpt = Checkpoint(config=config, vocab=vocab, params=store, step=int(header.get("step", 0)), version=version)
    try:
        model_from_checkpoint(ckpt)
    except ShapeError as e:
        raise CheckpointShapeError(f"{source}: parameters do not match the stored model config") from e
    return ckpt


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    ckpt = decode_checkpoint(path.read_bytes(), str(path))
    logger.info(f"📦 Checkpoint loaded: {path} ({ckpt.config.scheme}, step {ckpt.step})")
    return ckpt


def model_from_checkpoint(ckpt: Checkpoint) -> BlankModel:
    return build_model(ckpt.config.model, len(ckpt.vocab), params=ckpt.params)
