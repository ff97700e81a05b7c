"""Per-frame detection: road mask AND dilated Canny edges -> boxes -> patches
-> classifier -> scored detections, with per-stage timings."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import imgproc, synthetic
from .errors import CrackpotError, InvalidParameterError
from .imgproc import BoundingBox
from .neuralnet import NetworkConfig
from .neuralnet.network import forward, stack_patches
from .roadmask import RoadMaskSource, mask_for_frame

STAGES = ("segmask", "edge", "dilate", "combine", "contours", "classify")
CRACK = "crack"
BACKGROUND = "background"
RED = np.array([255, 0, 0], dtype=np.uint8)


@dataclass(frozen=True)
class PipelineConfig:
    canny_low: float = 50
    canny_high: float = 150
    dilate_iterations: int = 3
    min_area: int = 80
    patch_size: int = 64
    threshold: float = 0.5
    max_candidates: int = 64

    def __post_init__(self):
        if not self.canny_low < self.canny_high:
            raise InvalidParameterError("canny_low must be below canny_high")
        if not 0.0 <= self.threshold <= 1.0:
            raise InvalidParameterError(f"threshold must lie in [0, 1], got {self.threshold}")
        if self.max_candidates < 1:
            raise InvalidParameterError("max_candidates must be >= 1")
        if self.dilate_iterations < 0 or self.min_area < 1 or self.patch_size < 1:
            raise InvalidParameterError("dilate_iterations >= 0, min_area >= 1, patch_size >= 1 required")


@dataclass(frozen=True)
class Detection:
    box: BoundingBox
    score: float
    label: str


@dataclass
class FrameResult:
    frame_index: int
    detections: list
    candidate_count: int
    timings_us: dict = field(default_factory=dict)

    @property
    def cracks(self) -> list:
        return [d for d in self.detections if d.label == CRACK]

    def same_detections(self, other: "FrameResult") -> bool:
        """Equal up to timings."""
        return (
            self.frame_index == other.frame_index
            and self.candidate_count == other.candidate_count
            and self.detections == other.detections
        )


class _Clock:
    def __init__(self):
        self.timings = {}
        self._t = time.perf_counter()

    def lap(self, stage):
        now = time.perf_counter()
        self.timings[stage] = self.timings.get(stage, 0.0) + (now - self._t) * 1e6
        self._t = now


def candidate_mask(frame, road, cfg: PipelineConfig, clock=None):
    """Edge mask gated by the road mask, before component extraction."""
    gray = imgproc.to_grayscale(frame)
    edges = imgproc.canny_edges(gray, cfg.canny_low, cfg.canny_high)
    if clock:
        clock.lap("edge")
    grown = imgproc.dilate(edges, cfg.dilate_iterations)
    if clock:
        clock.lap("dilate")
    combined = imgproc.mask_and(road, grown)
    if clock:
        clock.lap("combine")
    return combined


def select_boxes(boxes, max_candidates):
    """Keep the largest ``max_candidates`` boxes, returned in (y, x) order."""
    if len(boxes) <= max_candidates:
        return list(boxes)
    # stable sort: equal areas keep their (y, x) order
    kept = sorted(range(len(boxes)), key=lambda i: -boxes[i].area)[:max_candidates]
    return [boxes[i] for i in sorted(kept)]


def generate_candidates(frame, road, cfg: PipelineConfig, clock=None):
    """Candidate ``(box, patch)`` pairs for one frame."""
    frame = imgproc.check_image(frame)
    road = np.asarray(road, dtype=bool)
    if road.shape != frame.shape[:2]:
        raise InvalidParameterError(f"road mask {road.shape} does not match frame {frame.shape[:2]}")
    combined = candidate_mask(frame, road, cfg, clock)
    boxes = select_boxes(imgproc.extract_boxes(combined, cfg.min_area), cfg.max_candidates)
    if clock:
        clock.lap("contours")
    return [(b, imgproc.crop_resize(frame, b, cfg.patch_size)) for b in boxes]


def classify_patches(patches, params, net_cfg: NetworkConfig, batch_size=64):
    if not patches:
        return np.zeros(0)
    dtype = params["fc.w"].dtype
    scores = []
    for start in range(0, len(patches), batch_size):
        x = stack_patches(patches[start : start + batch_size], net_cfg, dtype)
        scores.append(forward(params, x, net_cfg)[1][:, 1])
    return np.concatenate(scores)


def detect_frame(frame, src: RoadMaskSource, params, cfg: PipelineConfig, net_cfg: NetworkConfig, frame_index=0):
    frame = imgproc.check_image(frame)
    clock = _Clock()
    road = mask_for_frame(src, frame_index, frame.shape[1], frame.shape[0])
    clock.lap("segmask")
    candidates = generate_candidates(frame, road, cfg, clock)
    scores = classify_patches([c[1].pixels for c in candidates], params, net_cfg)
    clock.lap("classify")
    detections = [
        Detection(box, float(s), CRACK if s >= cfg.threshold else BACKGROUND)
        for (box, _), s in zip(candidates, scores)
    ]
    timings = {stage: clock.timings.get(stage, 0.0) for stage in STAGES}
    return FrameResult(frame_index, detections, len(candidates), timings)


class FrameError(CrackpotError):
    def __init__(self, frame_index, cause):
        super().__init__(f"frame {frame_index}: {cause}")
        self.frame_index = frame_index


@dataclass
class SequenceSummary:
    frames: int
    wall_seconds: float
    fps: float
    stage_stats: dict  # stage -> (mean_us, p50_us, p95_us)

    def timing_csv(self) -> str:
        lines = ["stage,mean_us,p50_us,p95_us"]
        for stage, (mean, p50, p95) in self.stage_stats.items():
            lines.append(f"{stage},{mean:.1f},{p50:.1f},{p95:.1f}")
        return "\n".join(lines) + "\n"


def summarize(results, wall_seconds, stages=STAGES) -> SequenceSummary:
    n = len(results)
    stats = {}
    for stage in stages:
        values = np.array([r.timings_us.get(stage, 0.0) for r in results]) if n else np.zeros(0)
        stats[stage] = (
            (float(values.mean()), float(np.percentile(values, 50)), float(np.percentile(values, 95)))
            if n
            else (0.0, 0.0, 0.0)
        )
    fps = n / wall_seconds if n and wall_seconds > 0 else 0.0
    return SequenceSummary(n, wall_seconds, fps, stats)


def run_sequence(frames, src, params, cfg: PipelineConfig, net_cfg: NetworkConfig, threads=1):
    """Detect on an ordered frame iterable; returns ``(results, summary)``.

    ``frames`` may yield arrays or zero-argument callables that load a frame,
    so decode errors surface with their frame index. All frames must share
    one size. Results come back in input order for any ``threads``.
    """
    shapes = {}

    def load(i, item):
        try:
            frame = imgproc.check_image(item() if callable(item) else item)
        except Exception as exc:
            raise FrameError(i, exc) from exc
        first = shapes.setdefault("first", frame.shape)
        if frame.shape != first:
            raise FrameError(i, f"size {frame.shape} differs from first frame {first}")
        return frame

    def one(args):
        i, item = args
        return detect_frame(load(i, item), src, params, cfg, net_cfg, frame_index=i)

    start = time.perf_counter()
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            # map yields in submission order
            results = list(pool.map(one, enumerate(frames)))
    else:
        results = [one(args) for args in enumerate(frames)]
    wall = time.perf_counter() - start
    return results, summarize(results, wall)


def draw_rectangle(img, box: BoundingBox, color=RED, thickness=2):
    x0, y0, x1, y1 = box.x, box.y, box.x + box.w, box.y + box.h
    t = thickness
    img[y0 : min(y0 + t, y1), x0:x1] = color
    img[max(y1 - t, y0) : y1, x0:x1] = color
    img[y0:y1, x0 : min(x0 + t, x1)] = color
    img[y0:y1, max(x1 - t, x0) : x1] = color


def render_overlay(frame, result: FrameResult) -> np.ndarray:
    """RGB copy of ``frame`` with crack detections outlined in red."""
    frame = imgproc.check_image(frame)
    out = np.repeat(frame[..., None], 3, axis=2) if frame.ndim == 2 else frame.copy()
    for det in result.detections:
        if det.label == CRACK:
            draw_rectangle(out, det.box)
    return out


def detections_csv(results) -> str:
    rows = []
    for r in results:
        for d in r.detections:
            rows.append((r.frame_index, d.box.y, d.box.x, d))
    rows.sort(key=lambda t: t[:3])
    lines = ["frame,x,y,w,h,score,label"]
    for frame_index, _, _, d in rows:
        b = d.box
        lines.append(f"{frame_index},{b.x},{b.y},{b.w},{b.h},{d.score:.6f},{d.label}")
    return "\n".join(lines) + "\n"


def benchmark(n_frames, params, net_cfg, cfg, seed=0, height=480, width=640):
    """Time detection on synthetic frames (half with a crack); frame generation is untimed."""
    rng = np.random.default_rng(seed)
    frames = [synthetic.crack_frame(rng, height, width, crack=(i % 2 == 0))[0] for i in range(n_frames)]
    src = RoadMaskSource.full_frame()
    results = []
    start = time.perf_counter()
    for i, frame in enumerate(frames):
        results.append(detect_frame(frame, src, params, cfg, net_cfg, frame_index=i))
    wall = time.perf_counter() - start
    summary = summarize(results, wall)
    pre = [sum(r.timings_us[k] for k in STAGES if k != "classify") for r in results]
    candidates = sum(r.candidate_count for r in results)
    classify = sum(r.timings_us["classify"] for r in results)
    extra = {
        "preprocess_fps": (len(pre) / (sum(pre) * 1e-6)) if pre and sum(pre) > 0 else 0.0,
        "classify_us_per_candidate": classify / candidates if candidates else 0.0,
        "candidates": candidates,
    }
    return summary, pre, extra
