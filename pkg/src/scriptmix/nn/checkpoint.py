"""Versioned checkpoint container.

Layout: a magic line, one JSON header line (schema version, model config,
vocabulary, step counter, array directory), then the raw little-endian
float32 array payloads concatenated in directory order. Loading and
re-saving a checkpoint reproduces the file byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from scriptmix.nn.crnn import CrnnConfig

MAGIC = b"SCRIPTMIX-CKPT\n"
SCHEMA_VERSION = 1


@dataclass
class Checkpoint:
    config: CrnnConfig
    vocab_chars: tuple[str, ...]
    step: int
    arrays: dict[str, np.ndarray]
    extra: dict


def save_checkpoint(
    path: str,
    config: CrnnConfig,
    vocab_chars: tuple[str, ...] | list[str],
    step: int,
    arrays: dict[str, np.ndarray],
    extra: dict | None = None,
) -> None:
    names = sorted(arrays)
    payload = {name: np.ascontiguousarray(arrays[name], dtype="<f4") for name in names}
    header = {
        "schema": SCHEMA_VERSION,
        "config": config.to_dict(),
        "vocab": "".join(vocab_chars),
        "step": int(step),
        "extra": extra or {},
        "arrays": [{"name": n, "shape": list(payload[n].shape)} for n in names],
    }
    header_bytes = json.dumps(header, sort_keys=True, ensure_ascii=True, separators=(",", ":")).encode("ascii")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(header_bytes)
        fh.write(b"\n")
        for n in names:
            fh.write(payload[n].tobytes())


def load_checkpoint(path: str) -> Checkpoint:
    with open(path, "rb") as fh:
        magic = fh.readline()
        if magic != MAGIC:
            raise ValueError(f"{path}: not a scriptmix checkpoint")
        header = json.loads(fh.readline().decode("ascii"))
        if header.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint schema {header.get('schema')}")
        arrays: dict[str, np.ndarray] = {}
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(count * 4)
            if len(buf) != count * 4:
                raise ValueError(f"{path}: truncated array {entry['name']}")
            arrays[entry["name"]] = np.frombuffer(buf, dtype="<f4").reshape(shape).copy()
    return Checkpoint(
        config=CrnnConfig.from_dict(header["config"]),
        vocab_chars=tuple(header["vocab"]),
        step=header["step"],
        arrays=arrays,
        extra=header.get("extra", {}),
    )
