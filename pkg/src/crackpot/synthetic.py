"""Synthetic road imagery: asphalt-like texture with optional dark cracks.

Used for toy training sets, pipeline tests and the throughput benchmark.
Everything is driven by a ``numpy.random.Generator`` so results are
reproducible from a seed.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .imgproc import BoundingBox, resize_bilinear


def road_texture(rng: np.random.Generator, height: int, width: int, mean=None, grain=None) -> np.ndarray:
    """Gray asphalt: fine grain over a slowly varying base level."""
    mean = rng.uniform(110, 160) if mean is None else mean
    grain = rng.uniform(3.0, 7.0) if grain is None else grain
    base = rng.normal(0.0, 1.0, (max(height // 16, 2), max(width // 16, 2)))
    base = ndimage.zoom(base, (height / base.shape[0], width / base.shape[1]), order=1)[:height, :width]
    img = mean + 4.0 * base + rng.normal(0.0, grain, (height, width))
    return np.clip(img, 0, 255)


def random_polyline(rng, height, width, length=None, segments=None, margin=8):
    """Jagged open polyline as an ``(M, 2)`` array of ``(x, y)`` vertices."""
    segments = int(rng.integers(4, 9)) if segments is None else segments
    length = rng.uniform(0.5, 0.9) * min(height, width) if length is None else length
    heading = rng.uniform(0, 2 * np.pi)
    step = length / segments
    pts = [np.zeros(2)]
    for _ in range(segments):
        heading += rng.uniform(-0.7, 0.7)
        pts.append(pts[-1] + step * np.array([np.cos(heading), np.sin(heading)]))
    pts = np.array(pts)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = hi - lo
    room = np.array([width, height]) - 2 * margin - span
    offset = margin + rng.uniform(0, 1, 2) * np.maximum(room, 0) - lo
    pts = pts + offset
    pts[:, 0] = np.clip(pts[:, 0], margin, width - 1 - margin)
    pts[:, 1] = np.clip(pts[:, 1], margin, height - 1 - margin)
    return pts


def _segment_distance(px, py, a, b):
    ab = b - a
    denom = max(float(ab @ ab), 1e-12)
    t = np.clip(((px - a[0]) * ab[0] + (py - a[1]) * ab[1]) / denom, 0.0, 1.0)
    dx = px - (a[0] + t * ab[0])
    dy = py - (a[1] + t * ab[1])
    return np.sqrt(dx * dx + dy * dy)


def draw_crack(img: np.ndarray, pts: np.ndarray, width: float, depth: float) -> BoundingBox:
    """Darken ``img`` (float, in place) along the polyline; returns the touched extent."""
    h, w = img.shape
    x0, y0 = np.floor(pts.min(axis=0) - width - 1).astype(int)
    x1, y1 = np.ceil(pts.max(axis=0) + width + 2).astype(int)
    x0, y0 = max(x0, 0), max(y0, 0)
    x1, y1 = min(x1, w), min(y1, h)
    py, px = np.mgrid[y0:y1, x0:x1].astype(np.float64)
    dist = np.full(py.shape, np.inf)
    for a, b in zip(pts[:-1], pts[1:]):
        dist = np.minimum(dist, _segment_distance(px, py, a, b))
    # soft profile: full depth inside the core, linear falloff over one pixel
    weight = np.clip(width / 2 + 0.5 - dist, 0.0, 1.0)
    img[y0:y1, x0:x1] -= depth * weight
    ys, xs = np.nonzero(weight > 0)
    return BoundingBox(
        int(x0 + xs.min()), int(y0 + ys.min()), int(xs.max() - xs.min() + 1), int(ys.max() - ys.min() + 1)
    )


def crack_frame(rng, height=480, width=640, crack=True):
    """A road frame, gray ``uint8``; returns ``(frame, ground_truth_box or None)``."""
    img = road_texture(rng, height, width)
    box = None
    if crack:
        length = rng.uniform(100, 260)
        pts = random_polyline(rng, height, width, length=length, margin=16)
        box = draw_crack(img, pts, width=rng.uniform(2.0, 4.0), depth=rng.uniform(55, 90))
    return np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8), box


def crack_patch(rng, size=64):
    """A crack spanning most of a patch, as a dilated-edge crop would frame it."""
    canvas = int(rng.integers(48, 161))
    img = road_texture(rng, canvas, canvas)
    pts = random_polyline(rng, canvas, canvas, length=rng.uniform(0.9, 1.4) * canvas, margin=4)
    draw_crack(img, pts, width=rng.uniform(2.0, 4.0), depth=rng.uniform(45, 90))
    img = np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8)
    return resize_bilinear(img, size, size)


def clean_patch(rng, size=64):
    canvas = int(rng.integers(48, 161))
    img = road_texture(rng, canvas, canvas)
    # occasional pale stain: soft, no sharp line structure
    if rng.random() < 0.5:
        cy, cx = rng.uniform(0, canvas, 2)
        r = rng.uniform(canvas / 8, canvas / 3)
        yy, xx = np.mgrid[0:canvas, 0:canvas]
        img += rng.uniform(-20, 20) * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * r * r))
    img = np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8)
    return resize_bilinear(img, size, size)


def patch_set(rng, n_crack, n_clean, size=64):
    """``(patches, labels)`` with cracks first, then clean patches."""
    patches = [crack_patch(rng, size) for _ in range(n_crack)]
    patches += [clean_patch(rng, size) for _ in range(n_clean)]
    labels = [1] * n_crack + [0] * n_clean
    return patches, labels
