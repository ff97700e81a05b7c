"""Binary PGM (P5) / PPM (P6) reading and writing.

Images are plain ``uint8`` numpy arrays: ``(H, W)`` for gray, ``(H, W, 3)``
for RGB. Boolean masks are written as P5 with values {0, 255}.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import FormatError


def _tokens(data: bytes, count: int):
    """Return ``count`` header tokens and the offset of the raster."""
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise FormatError(f"truncated header at offset {pos}")
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates maxval from the raster
    if pos >= n or not data[pos : pos + 1].isspace():
        raise FormatError(f"missing raster separator at offset {pos}")
    return tokens, pos + 1


def decode(data: bytes, name: str = "<bytes>") -> np.ndarray:
    if data[:2] not in (b"P5", b"P6"):
        raise FormatError(f"{name}: bad magic {data[:2]!r}")
    channels = 1 if data[:2] == b"P5" else 3
    tokens, offset = _tokens(data, 4)
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise FormatError(f"{name}: non-integer header field") from exc
    if maxval != 255:
        raise FormatError(f"{name}: unsupported maxval {maxval}")
    if width < 1 or height < 1:
        raise FormatError(f"{name}: empty image {width}x{height}")
    size = width * height * channels
    if len(data) - offset < size:
        raise FormatError(f"{name}: truncated raster at offset {len(data)}, need {offset + size}")
    arr = np.frombuffer(data, dtype=np.uint8, count=size, offset=offset)
    shape = (height, width) if channels == 1 else (height, width, 3)
    return arr.reshape(shape).copy()


def encode(img: np.ndarray) -> bytes:
    img = np.asarray(img)
    if img.dtype == bool:
        img = img.astype(np.uint8) * 255
    if img.dtype != np.uint8:
        raise ValueError(f"expected uint8 image, got {img.dtype}")
    if img.ndim == 2:
        magic = b"P5"
    elif img.ndim == 3 and img.shape[2] == 3:
        magic = b"P6"
    else:
        raise ValueError(f"unsupported image shape {img.shape}")
    h, w = img.shape[:2]
    return magic + b"\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(img).tobytes()


def read_image(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    return decode(data, name=os.fspath(path))


def write_image(path: str | os.PathLike, img: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(encode(img))
