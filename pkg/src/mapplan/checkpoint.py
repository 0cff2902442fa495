"""Single-file checkpoints: weights, Adam state and the run configuration.

Layout (version 1, all integers little-endian)::

    8 bytes   magic b"MPLNCKPT"
    4 bytes   uint32 format version
    8 bytes   uint64 length N of the JSON header
    N bytes   UTF-8 JSON header (sorted keys, no whitespace)
    rest      float64 little-endian payload

The header holds ``config`` (every RunConfig field), ``adam_step`` and a
``tensors`` list of ``{"name", "kind", "shape", "offset"}`` entries, where
``kind`` is ``param``, ``adam_m`` or ``adam_v`` and ``offset`` counts
float64 elements into the payload. Entries are sorted by (kind, name), so
saving a loaded checkpoint reproduces the file byte for byte.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig
from .errors import CheckpointError, ConfigError
from .numerics import AdamState, Tensor, parameter

MAGIC = b"MPLNCKPT"
VERSION = 1
_KINDS = ("param", "adam_m", "adam_v")
_PREFIX = struct.Struct("<8sIQ")


@dataclass
class Checkpoint:
    params: dict[str, Tensor]
    state: AdamState
    config: RunConfig


def to_bytes(ck: Checkpoint) -> bytes:
    sources = {"param": {k: t.value for k, t in ck.params.items()}, "adam_m": ck.state.m, "adam_v": ck.state.v}
    entries, chunks, offset = [], [], 0
    for kind in _KINDS:
        for name in sorted(sources[kind]):
            a = np.ascontiguousarray(sources[kind][name], dtype="<f8")
            entries.append({"name": name, "kind": kind, "shape": list(a.shape), "offset": offset})
            chunks.append(a.tobytes())
            offset += a.size
    header = {"adam_step": ck.state.step, "config": ck.config.to_dict(), "tensors": entries}
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return _PREFIX.pack(MAGIC, VERSION, len(blob)) + blob + b"".join(chunks)


def from_bytes(data: bytes, where: str = "<checkpoint>") -> Checkpoint:
    if len(data) < _PREFIX.size:
        raise CheckpointError(f"{where}: file too short for a checkpoint header")
    magic, version, n = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"{where}: not a mapplan checkpoint (bad magic)")
    if version != VERSION:
        raise CheckpointError(f"{where}: unsupported checkpoint version {version}")
    start = _PREFIX.size + n
    if len(data) < start:
        raise CheckpointError(f"{where}: truncated header")
    try:
        header = json.loads(data[_PREFIX.size : start].decode("utf-8"))
        entries = header["tensors"]
        step = int(header["adam_step"])
        config = RunConfig(**header["config"])
    except (ValueError, KeyError, TypeError, ConfigError) as exc:
        raise CheckpointError(f"{where}: bad header: {exc}") from None
    payload = np.frombuffer(data, dtype="<f8", offset=start) if len(data) > start else np.zeros(0)
    if (len(data) - start) % 8:
        raise CheckpointError(f"{where}: payload is not a whole number of float64 values")
    out: dict[str, dict[str, np.ndarray]] = {k: {} for k in _KINDS}
    total = 0
    for e in entries:
        shape = tuple(e["shape"])
        size = int(np.prod(shape, dtype=np.int64))
        lo = int(e["offset"])
        if e["kind"] not in out or lo + size > payload.size:
            raise CheckpointError(f"{where}: tensor {e['name']!r} is out of range or has unknown kind")
        out[e["kind"]][e["name"]] = payload[lo : lo + size].astype(np.float64).reshape(shape)
        total += size
    if total != payload.size:
        raise CheckpointError(f"{where}: payload holds {payload.size} values, header describes {total}")
    params = {k: parameter(v) for k, v in out["param"].items()}
    return Checkpoint(params, AdamState(step, out["adam_m"], out["adam_v"]), config)


def save_checkpoint(ck: Checkpoint, path: str | os.PathLike) -> Path:
    p = Path(path)
    try:
        p.write_bytes(to_bytes(ck))
    except OSError as exc:
        raise CheckpointError(f"cannot write checkpoint {p}: {exc.strerror or exc}") from None
    return p


def load_checkpoint(path: str | os.PathLike) -> Checkpoint:
    p = Path(path)
    if not p.is_file():
        raise CheckpointError(f"checkpoint not found: {p}")
    return from_bytes(p.read_bytes(), str(p))


def check_compatible(params: dict[str, Tensor], expected: dict[str, Tensor]) -> None:
    """Raise if names or shapes differ from a freshly initialized model."""
    missing = sorted(set(expected) - set(params))
    extra = sorted(set(params) - set(expected))
    if missing or extra:
        raise CheckpointError(f"checkpoint weights do not match the model: missing {missing[:3]}, extra {extra[:3]}")
    for k, t in expected.items():
        if params[k].shape != t.shape:
            raise CheckpointError(f"weight {k} has shape {params[k].shape}, model expects {t.shape}")
