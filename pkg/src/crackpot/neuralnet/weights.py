"""``.cpot`` weight files.

Layout, all little-endian::

    b"CPOT"  u32 version (=1)  u32 tensor_count
    per tensor:
        u16 name_len, name (UTF-8), u8 rank, rank x u32 extents,
        prod(extents) x float32, row-major

The first tensor is ``config``: the NetworkConfig integers as a rank-1
tensor. Parameter tensors follow in the fixed parameter order.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from ..errors import FormatError, InvalidParameterError
from .config import NetworkConfig, param_shapes

MAGIC = b"CPOT"
VERSION = 1


def encode_tensors(tensors: dict[str, np.ndarray]) -> bytes:
    out = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    for name, arr in tensors.items():
        raw = name.encode("utf-8")
        arr = np.asarray(arr)
        out.append(struct.pack("<H", len(raw)) + raw)
        out.append(struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape))
        out.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    return b"".join(out)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(f"truncated {what} at offset {self.pos}")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def decode_tensors(data: bytes) -> dict[str, np.ndarray]:
    r = _Reader(data)
    if r.take(4, "magic") != MAGIC:
        raise FormatError("bad magic at offset 0")
    (version,) = r.unpack("<I", "version")
    if version != VERSION:
        raise FormatError(f"unsupported version {version} at offset 4")
    (count,) = r.unpack("<I", "tensor count")
    tensors = {}
    for _ in range(count):
        start = r.pos
        (name_len,) = r.unpack("<H", "name length")
        try:
            name = r.take(name_len, "name").decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"invalid tensor name at offset {start}") from exc
        if name in tensors:
            raise FormatError(f"duplicate tensor {name!r} at offset {start}")
        (rank,) = r.unpack("<B", "rank")
        shape = r.unpack(f"<{rank}I", "extents")
        size = int(np.prod(shape, dtype=np.int64))
        values = np.frombuffer(r.take(4 * size, f"values of {name!r}"), dtype="<f4")
        tensors[name] = values.reshape(shape).astype(np.float32)
    if r.pos != len(data):
        raise FormatError(f"trailing bytes at offset {r.pos}")
    return tensors


def read_tensors(path) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        return decode_tensors(fh.read())


def encode_weights(params, cfg: NetworkConfig) -> bytes:
    tensors = {"config": np.array(cfg.to_ints(), dtype=np.float32)}
    for name in param_shapes(cfg):
        tensors[name] = params[name]
    return encode_tensors(tensors)


def decode_weights(data: bytes):
    tensors = decode_tensors(data)
    if "config" not in tensors:
        raise FormatError("missing config tensor")
    raw = tensors.pop("config")
    if raw.ndim != 1 or not np.all(raw == np.round(raw)):
        raise FormatError("config tensor must be a rank-1 list of integers")
    try:
        cfg = NetworkConfig.from_ints(raw)
    except InvalidParameterError as exc:
        raise FormatError(f"invalid config: {exc}") from exc
    expected = param_shapes(cfg)
    if set(tensors) != set(expected):
        raise FormatError(f"tensor names differ from config: {sorted(set(tensors) ^ set(expected))}")
    params = {}
    for name, shape in expected.items():
        if tensors[name].shape != shape:
            raise FormatError(f"{name} has shape {tensors[name].shape}, config needs {shape}")
        params[name] = tensors[name]
    return params, cfg


def save_weights(params, cfg: NetworkConfig, path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_weights(params, cfg))


def load_weights(path: str | os.PathLike):
    """Return ``(params, cfg)``; raises FormatError without partial results."""
    with open(path, "rb") as fh:
        return decode_weights(fh.read())
