"""Pixel-level primitives for candidate generation.

Images are ``uint8`` arrays shaped ``(H, W)`` or ``(H, W, 3)``; masks are
boolean ``(H, W)`` arrays. Everything here is a pure function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .errors import InvalidParameterError

GRAY_WEIGHTS = (0.299, 0.587, 0.114)

# direction quantization bounds for non-maximum suppression
_TAN_22_5 = math.tan(math.pi / 8)
_TAN_67_5 = math.tan(3 * math.pi / 8)

_EIGHT = np.ones((3, 3), dtype=bool)


class BoundingBox(NamedTuple):
    x: int
    y: int
    w: int
    h: int

    @property
    def area(self) -> int:
        return self.w * self.h

    def within(self, width: int, height: int) -> bool:
        return (
            self.x >= 0
            and self.y >= 0
            and self.w >= 1
            and self.h >= 1
            and self.x + self.w <= width
            and self.y + self.h <= height
        )

    def overlaps(self, other: "BoundingBox") -> bool:
        return (
            self.x < other.x + other.w
            and other.x < self.x + self.w
            and self.y < other.y + other.h
            and other.y < self.y + self.h
        )


@dataclass(frozen=True)
class CandidatePatch:
    source_box: BoundingBox
    pixels: np.ndarray


def _round_u8(values: np.ndarray) -> np.ndarray:
    # half-up rounding, not numpy's round-half-even
    return np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)


def check_image(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.dtype != np.uint8:
        raise InvalidParameterError(f"image must be uint8, got {img.dtype}")
    if img.ndim == 3 and img.shape[2] == 3:
        pass
    elif img.ndim != 2:
        raise InvalidParameterError(f"image must be (H, W) or (H, W, 3), got {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise InvalidParameterError("empty image")
    return img


def to_grayscale(img: np.ndarray) -> np.ndarray:
    img = check_image(img)
    if img.ndim == 2:
        return img
    return _round_u8(img.astype(np.float64) @ np.array(GRAY_WEIGHTS))


def gaussian_kernel(sigma: float, radius: int) -> np.ndarray:
    if not sigma > 0:
        raise InvalidParameterError(f"sigma must be positive, got {sigma}")
    if radius < 1:
        raise InvalidParameterError(f"radius must be >= 1, got {radius}")
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-(t * t) / (2.0 * sigma * sigma))
    return g / g.sum()


def gaussian_blur(img: np.ndarray, sigma: float = 1.4, radius: int = 2) -> np.ndarray:
    """Separable Gaussian smoothing (horizontal, then vertical), clamp-to-edge."""
    img = check_image(img)
    if img.ndim != 2:
        raise InvalidParameterError("gaussian_blur expects a single-channel image")
    kernel = gaussian_kernel(sigma, radius)
    a = ndimage.correlate1d(img.astype(np.float64), kernel, axis=1, mode="nearest")
    a = ndimage.correlate1d(a, kernel, axis=0, mode="nearest")
    return _round_u8(a)


def sobel(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """3x3 Sobel gradients ``(gx, gy)`` as int32, clamp-to-edge; x right, y down."""
    p = np.pad(img.astype(np.int32), 1, mode="edge")
    h, w = img.shape
    tl, tc, tr = p[:h, :w], p[:h, 1 : w + 1], p[:h, 2:]
    ml, mr = p[1 : h + 1, :w], p[1 : h + 1, 2:]
    bl, bc, br = p[2:, :w], p[2:, 1 : w + 1], p[2:, 2:]
    gx = (tr + 2 * mr + br) - (tl + 2 * ml + bl)
    gy = (bl + 2 * bc + br) - (tl + 2 * tc + tr)
    return gx, gy


# neighbour offsets (dy, dx) on the positive side of each quantized direction:
# 0 horizontal, 1 vertical, 2 main diagonal, 3 anti-diagonal
_NMS_OFFSETS = np.array([[0, 1], [1, 0], [1, 1], [1, -1]], dtype=np.intp)


def non_max_suppression(mag, gx, gy, floor=1):
    """Thin gradient ridges along four quantized directions.

    A pixel survives when it is strictly greater than its neighbour on the
    negative side of the gradient direction and not smaller than the one on
    the positive side, so plateaus two pixels wide keep exactly one pixel.
    Pixels below ``floor`` and the one-pixel image frame are always
    suppressed.
    """
    h, w = mag.shape
    out = np.zeros_like(mag)
    if h < 3 or w < 3:
        return out
    ys, xs = np.nonzero(mag[1:-1, 1:-1] >= max(floor, 1))
    ys += 1
    xs += 1
    m = mag[ys, xs]
    gxs = gx[ys, xs]
    gys = gy[ys, xs]
    ax = np.abs(gxs).astype(np.float64)
    ay = np.abs(gys).astype(np.float64)

    code = np.where(gxs * gys > 0, 2, 3)
    code[ay > ax * _TAN_67_5] = 1
    code[ay <= ax * _TAN_22_5] = 0
    dy, dx = _NMS_OFFSETS[code].T
    keep = (m > mag[ys - dy, xs - dx]) & (m >= mag[ys + dy, xs + dx])
    out[ys[keep], xs[keep]] = m[keep]
    return out


def hysteresis(suppressed: np.ndarray, low: float, high: float) -> np.ndarray:
    weak = suppressed >= low
    weak &= suppressed > 0
    strong = suppressed >= high
    labels, count = ndimage.label(weak, structure=_EIGHT)
    if count == 0:
        return np.zeros(suppressed.shape, dtype=bool)
    seeded = np.zeros(count + 1, dtype=bool)
    seeded[labels[strong]] = True
    seeded[0] = False
    return seeded[labels]


def canny_stages(
    img: np.ndarray,
    low: float = 50,
    high: float = 150,
    sigma: float = 1.4,
    radius: int = 2,
) -> dict[str, np.ndarray]:
    """Run Canny and return every intermediate stage keyed by name."""
    if not low < high:
        raise InvalidParameterError(f"canny thresholds need low < high, got {low}, {high}")
    img = check_image(img)
    if img.ndim != 2:
        raise InvalidParameterError("canny_edges expects a single-channel image")
    blurred = gaussian_blur(img, sigma, radius)
    gx, gy = sobel(blurred)
    mag = np.abs(gx) + np.abs(gy)
    suppressed = non_max_suppression(mag, gx, gy, floor=low)
    edges = hysteresis(suppressed, low, high)
    return {
        "blurred": blurred,
        "gx": gx,
        "gy": gy,
        "magnitude": mag,
        "suppressed": suppressed,
        "edges": edges,
    }


def canny_edges(img, low=50, high=150, sigma=1.4, radius=2) -> np.ndarray:
    return canny_stages(img, low, high, sigma, radius)["edges"]


def dilate(mask: np.ndarray, iterations: int = 3) -> np.ndarray:
    """Binary dilation by a 3x3 square, repeated ``iterations`` times."""
    if iterations < 0:
        raise InvalidParameterError(f"iterations must be >= 0, got {iterations}")
    out = np.asarray(mask, dtype=bool)
    if iterations == 0:
        return out.copy()
    for _ in range(iterations):
        # the square element is separable: rows then columns
        grown = out.copy()
        grown[:, 1:] |= out[:, :-1]
        grown[:, :-1] |= out[:, 1:]
        out = grown.copy()
        out[1:, :] |= grown[:-1, :]
        out[:-1, :] |= grown[1:, :]
    return out


def mask_and(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise InvalidParameterError(f"mask shapes differ: {a.shape} vs {b.shape}")
    return a & b


def extract_boxes(mask: np.ndarray, min_area: int = 80) -> list[BoundingBox]:
    """Tight boxes of 8-connected components with at least ``min_area`` pixels.

    Sorted by top-left ``(y, x)``; ties keep raster order of the component's
    first pixel.
    """
    if min_area < 1:
        raise InvalidParameterError(f"min_area must be >= 1, got {min_area}")
    labels, count = ndimage.label(np.asarray(mask, dtype=bool), structure=_EIGHT)
    if count == 0:
        return []
    areas = np.bincount(labels.ravel(), minlength=count + 1)
    boxes = []
    for idx, sl in enumerate(ndimage.find_objects(labels), start=1):
        if sl is None or areas[idx] < min_area:
            continue
        ys, xs = sl
        boxes.append(BoundingBox(xs.start, ys.start, xs.stop - xs.start, ys.stop - ys.start))
    boxes.sort(key=lambda b: (b.y, b.x))
    return boxes


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize with half-pixel-centre mapping and clamped sampling.

    Evaluated in exact integer arithmetic so ties round half-up regardless
    of floating-point evaluation order.
    """
    img = np.asarray(img)
    in_h, in_w = img.shape[:2]

    def axis(n_in, n_out):
        # source coordinate scaled by 2 * n_out: (o + 0.5) * n_in / n_out - 0.5
        den = 2 * n_out
        num = np.clip((2 * np.arange(n_out, dtype=np.int64) + 1) * n_in - n_out, 0, (n_in - 1) * den)
        lo = num // den
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, num - lo * den, den

    y0, y1, fy, dy = axis(in_h, out_h)
    x0, x1, fx, dx = axis(in_w, out_w)
    a = img.astype(np.int64)
    extra = (1,) * (a.ndim - 2)
    fy = fy.reshape((-1, 1) + extra)
    fx = fx.reshape((1, -1) + extra)
    top = a[y0][:, x0] * (dx - fx) + a[y0][:, x1] * fx
    bottom = a[y1][:, x0] * (dx - fx) + a[y1][:, x1] * fx
    den = dx * dy
    total = top * (dy - fy) + bottom * fy
    return np.clip((2 * total + den) // (2 * den), 0, 255).astype(np.uint8)


def crop_resize(img: np.ndarray, box: BoundingBox, out_size: int = 64) -> CandidatePatch:
    img = check_image(img)
    if out_size < 1:
        raise InvalidParameterError(f"out_size must be >= 1, got {out_size}")
    h, w = img.shape[:2]
    if not box.within(w, h):
        raise InvalidParameterError(f"box {box} exceeds image bounds {w}x{h}")
    crop = img[box.y : box.y + box.h, box.x : box.x + box.w]
    if box.w == out_size and box.h == out_size:
        return CandidatePatch(box, crop.copy())
    return CandidatePatch(box, resize_bilinear(crop, out_size, out_size))
