"""Road masks from sources other than a segmentation network.

The detector only needs a boolean road/not-road map per frame. It can come
from precomputed mask files (one PGM per frame), a whole-frame default, or a
fixed trapezoid that approximates the road ahead of a dashboard camera.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from . import netpbm
from .errors import InvalidParameterError, NotFoundError

KINDS = ("external-file", "full-frame", "fixed-trapezoid")

Point = tuple[float, float]


@dataclass(frozen=True)
class RoadMaskSource:
    """Where road masks come from.

    ``pattern`` is used by ``external-file`` and must contain ``{index}``.
    ``corners`` is used by ``fixed-trapezoid``: four ``(x, y)`` points given
    as fractions of frame width and height, in drawing order.
    """

    kind: str = "full-frame"
    pattern: str | None = None
    corners: tuple[Point, ...] = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown road mask kind {self.kind!r}")
        if self.kind == "external-file" and (not self.pattern or "{index}" not in self.pattern):
            raise InvalidParameterError("external-file source needs a pattern with {index}")
        if self.kind == "fixed-trapezoid" and len(self.corners) != 4:
            raise InvalidParameterError("fixed-trapezoid source needs four corners")

    @classmethod
    def full_frame(cls):
        return cls("full-frame")

    @classmethod
    def from_files(cls, pattern: str):
        return cls("external-file", pattern=pattern)

    @classmethod
    def trapezoid(cls, corners):
        return cls("fixed-trapezoid", corners=tuple((float(x), float(y)) for x, y in corners))


def polygon_mask(points, width: int, height: int) -> np.ndarray:
    """Scanline fill of a polygon given in pixel-edge coordinates.

    A pixel belongs to the polygon when its centre ``(x + 0.5, y + 0.5)``
    lies inside by the even-odd rule. Centres falling exactly on a right
    or bottom boundary are treated as inside, so a polygon covering the
    whole frame selects every pixel.
    """
    mask = np.zeros((height, width), dtype=bool)
    pts = [(float(x), float(y)) for x, y in points]
    n = len(pts)
    # tiny outward nudge so boundary centres land inside
    eps = 1e-9
    for row in range(height):
        cy = row + 0.5
        crossings = []
        for i in range(n):
            (x0, y0), (x1, y1) = pts[i], pts[(i + 1) % n]
            if (y0 <= cy < y1) or (y1 <= cy < y0):
                crossings.append(x0 + (cy - y0) * (x1 - x0) / (y1 - y0))
        crossings.sort()
        for left, right in zip(crossings[0::2], crossings[1::2]):
            # centres in [left, right]
            start = max(int(np.ceil(left - 0.5 - eps)), 0)
            stop = min(int(np.floor(right - 0.5 + eps)), width - 1)
            if stop >= start:
                mask[row, start : stop + 1] = True
    return mask


def mask_for_frame(src: RoadMaskSource, frame_index: int, width: int, height: int) -> np.ndarray:
    if src.kind == "full-frame":
        return np.ones((height, width), dtype=bool)
    if src.kind == "fixed-trapezoid":
        pts = [(x * width, y * height) for x, y in src.corners]
        return polygon_mask(pts, width, height)
    path = src.pattern.format(index=frame_index)
    if not os.path.exists(path):
        raise NotFoundError(f"road mask for frame {frame_index} not found: {path}")
    img = netpbm.read_image(path)
    if img.ndim != 2:
        raise InvalidParameterError(f"road mask {path} must be single-channel")
    if img.shape != (height, width):
        raise InvalidParameterError(
            f"road mask {path} is {img.shape[1]}x{img.shape[0]}, frame is {width}x{height}"
        )
    return img >= 128
