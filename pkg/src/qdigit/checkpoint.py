"""Versioned binary checkpoint container.

Layout (all integers little-endian):

    bytes 0..3    magic b"QDCK"
    bytes 4..7    format version, uint32
    bytes 8..15   header length in bytes, uint64
    header        UTF-8 JSON (sorted keys): model config, ordered blob
                  manifest (name, shape, dtype, offset, nbytes), and the
                  SHA-256 of the payload
    payload       concatenated raw little-endian float64 blobs

Writes are deterministic byte-for-byte given identical model state.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .errors import DataError
from .model import HybridModel

MAGIC = b"QDCK"
FORMAT_VERSION = 1


def save_checkpoint(path, model: HybridModel, extra: dict | None = None):
    blobs = []
    manifest = []
    offset = 0
    for name, arr in model.named_params():
        raw = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        manifest.append({
            "name": name,
            "shape": list(arr.shape),
            "dtype": "<f8",
            "offset": offset,
            "nbytes": len(raw),
        })
        blobs.append(raw)
        offset += len(raw)
    payload = b"".join(blobs)
    header = {
        "config": {
            "n_qubits": model.n_qubits,
            "depth": model.depth,
            "mode": model.mode,
            "dropout_p": model.dropout_p,
        },
        "extra": extra or {},
        "params": manifest,
        "sha256": hashlib.sha256(payload).hexdigest(),
    }
    header_bytes = json.dumps(header, sort_keys=True,
                              separators=(",", ":")).encode()
    with Path(path).open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<Q", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(payload)


def load_checkpoint(path) -> tuple[HybridModel, dict]:
    """Rebuild the model from a checkpoint; returns (model, header)."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"checkpoint {path} does not exist")
    raw = path.read_bytes()
    if len(raw) < 16 or raw[:4] != MAGIC:
        raise DataError(f"{path} is not a qdigit checkpoint")
    version = struct.unpack("<I", raw[4:8])[0]
    if version != FORMAT_VERSION:
        raise DataError(f"unsupported checkpoint version {version}")
    header_len = struct.unpack("<Q", raw[8:16])[0]
    header = json.loads(raw[16:16 + header_len].decode())
    payload = raw[16 + header_len:]
    if hashlib.sha256(payload).hexdigest() != header["sha256"]:
        raise DataError(f"checkpoint {path} failed its integrity check")

    cfg = header["config"]
    model = HybridModel(n_qubits=cfg["n_qubits"], depth=cfg["depth"],
                        mode=cfg["mode"], dropout_p=cfg["dropout_p"], seed=0)
    by_name = {name: arr for name, arr in model.named_params()}
    for entry in header["params"]:
        arr = by_name.get(entry["name"])
        if arr is None or list(arr.shape) != entry["shape"]:
            raise DataError(
                f"checkpoint blob {entry['name']!r} does not match the "
                f"model layout")
        blob = payload[entry["offset"]:entry["offset"] + entry["nbytes"]]
        arr[...] = np.frombuffer(blob, dtype="<f8").reshape(entry["shape"])
    return model, header
