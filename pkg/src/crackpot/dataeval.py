"""Labelled patch datasets, the training loop and classification metrics."""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import netpbm
from .errors import FormatError, InvalidParameterError, NotFoundError
from .neuralnet import AdamState, NetworkConfig, adam_step, init_params
from .neuralnet.network import forward, loss_and_grads, stack_patches

CLASS_DIRS = (("crack", 1), ("nocrack", 0))
IMAGE_SUFFIXES = (".pgm", ".ppm")


@dataclass(frozen=True)
class LabeledPatch:
    pixels: np.ndarray
    label: int
    source: str = ""

    def __post_init__(self):
        if self.label not in (0, 1):
            raise InvalidParameterError(f"label must be 0 or 1, got {self.label}")


@dataclass(frozen=True)
class DatasetSplit:
    train: list
    val: list
    test: list
    seed: int


@dataclass(frozen=True)
class MetricsReport:
    tp: int
    fp: int
    tn: int
    fn: int
    precision: float
    recall: float
    f1: float
    accuracy: float
    # set when any ratio hit 0/0 and was reported as 0
    degenerate: bool = False

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    CSV_HEADER = "tp,fp,tn,fn,precision,recall,f1,accuracy"

    def csv_row(self) -> str:
        return (
            f"{self.tp},{self.fp},{self.tn},{self.fn},"
            f"{self.precision:.6f},{self.recall:.6f},{self.f1:.6f},{self.accuracy:.6f}"
        )


@dataclass
class EpochRecord:
    epoch: int
    mean_loss: float
    train_accuracy: float


@dataclass
class TrainResult:
    params: dict
    log: list = field(default_factory=list)


def load_patch_dataset(root) -> list[LabeledPatch]:
    """Read ``root/crack/*`` (label 1) then ``root/nocrack/*`` (label 0)."""
    patches = []
    for sub, label in CLASS_DIRS:
        folder = os.path.join(root, sub)
        if not os.path.isdir(folder):
            raise NotFoundError(f"dataset subdirectory missing: {folder}")
        for name in sorted(os.listdir(folder)):
            if not name.lower().endswith(IMAGE_SUFFIXES):
                continue
            path = os.path.join(folder, name)
            try:
                pixels = netpbm.read_image(path)
            except (OSError, FormatError) as exc:
                raise FormatError(f"cannot read patch {path}: {exc}") from exc
            patches.append(LabeledPatch(pixels, label, path))
    return patches


def save_patch_dataset(root, patches, labels) -> None:
    """Write patches into the ``crack/`` / ``nocrack/`` layout."""
    counters = {0: 0, 1: 0}
    for sub, _ in CLASS_DIRS:
        os.makedirs(os.path.join(root, sub), exist_ok=True)
    for pixels, label in zip(patches, labels):
        sub = "crack" if label == 1 else "nocrack"
        ext = ".pgm" if pixels.ndim == 2 else ".ppm"
        netpbm.write_image(os.path.join(root, sub, f"{counters[label]:06d}{ext}"), pixels)
        counters[label] += 1


def split_dataset(patches, val_fraction=0.1, test_fraction=0.2, seed=0) -> DatasetSplit:
    order = np.random.default_rng(seed).permutation(len(patches))
    n_test = int(round(test_fraction * len(patches)))
    n_val = int(round(val_fraction * len(patches)))
    test = [patches[i] for i in order[:n_test]]
    val = [patches[i] for i in order[n_test : n_test + n_val]]
    train = [patches[i] for i in order[n_test + n_val :]]
    return DatasetSplit(train, val, test, seed)


def _ratio(num, den):
    return (num / den, False) if den else (0.0, True)


def compute_metrics(tp, fp, tn, fn) -> MetricsReport:
    counts = (tp, fp, tn, fn)
    if min(counts) < 0:
        raise InvalidParameterError(f"counts must be non-negative, got {counts}")
    if sum(counts) == 0:
        raise InvalidParameterError("no samples: all confusion counts are zero")
    precision, d1 = _ratio(tp, fp + tp)
    recall, d2 = _ratio(tp, tp + fn)
    f1, d3 = _ratio(2 * precision * recall, precision + recall)
    accuracy = (tp + tn) / (tp + tn + fp + fn)
    return MetricsReport(tp, fp, tn, fn, precision, recall, f1, accuracy, d1 or d2 or d3)


def confusion_counts(labels, predicted) -> tuple[int, int, int, int]:
    """``(tp, fp, tn, fn)`` with label 1 as the positive class."""
    labels = np.asarray(labels, dtype=bool)
    predicted = np.asarray(predicted, dtype=bool)
    tp = int(np.sum(labels & predicted))
    fp = int(np.sum(~labels & predicted))
    tn = int(np.sum(~labels & ~predicted))
    fn = int(np.sum(labels & ~predicted))
    return tp, fp, tn, fn


def _as_arrays(dataset, cfg, dtype=np.float32):
    shapes = {p.pixels.shape[:2] for p in dataset}
    if len(shapes) != 1:
        raise InvalidParameterError(f"all patches must share one size, got {sorted(shapes)}")
    x = stack_patches([p.pixels for p in dataset], cfg, dtype)
    y = np.array([p.label for p in dataset], dtype=np.intp)
    return x, y


def _batch_grads(params, x, y, cfg, pool, threads):
    if pool is None or len(y) < 2 * threads:
        return loss_and_grads(params, x, y, cfg)
    chunks = np.array_split(np.arange(len(y)), threads)
    parts = list(pool.map(lambda idx: loss_and_grads(params, x[idx], y[idx], cfg), chunks))
    # reduce in chunk order so the result does not depend on scheduling
    losses = np.concatenate([p[0] for p in parts])
    probs = np.concatenate([p[1] for p in parts])
    grads = {k: sum(p[2][k] for p in parts) for k in params}
    return losses, probs, grads


def train(
    dataset,
    cfg: NetworkConfig,
    lr=1e-5,
    batch_size=64,
    epochs=20,
    beta1=0.9,
    beta2=0.999,
    eps=1e-8,
    seed=0,
    threads=1,
    params=None,
    on_epoch=None,
) -> TrainResult:
    """Mini-batch Adam on softmax cross entropy.

    Each epoch reshuffles with a generator seeded from ``seed``; the last
    short batch is kept and gradients are averaged over each batch. With
    ``threads == 1`` the run is bit-reproducible.
    """
    if len(dataset) == 0:
        raise InvalidParameterError("cannot train on an empty dataset")
    if batch_size < 1 or epochs < 0:
        raise InvalidParameterError(f"bad batch size {batch_size} or epochs {epochs}")
    params = init_params(cfg, seed) if params is None else params
    result = TrainResult(params)
    if epochs == 0:
        return result
    x, y = _as_arrays(dataset, cfg, params["fc.w"].dtype)
    state = AdamState.for_params(params)
    shuffler = np.random.default_rng([seed, 1])
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        for epoch in range(1, epochs + 1):
            order = shuffler.permutation(len(y))
            loss_sum = 0.0
            correct = 0
            for start in range(0, len(y), batch_size):
                idx = order[start : start + batch_size]
                losses, probs, grads = _batch_grads(params, x[idx], y[idx], cfg, pool, threads)
                scale = 1.0 / len(idx)
                for g in grads.values():
                    g *= scale
                adam_step(params, grads, state, lr=lr, beta1=beta1, beta2=beta2, eps=eps)
                loss_sum += float(losses.sum())
                correct += int(np.sum((probs[:, 1] >= 0.5) == (y[idx] == 1)))
            record = EpochRecord(epoch, loss_sum / len(y), correct / len(y))
            result.log.append(record)
            if on_epoch is not None:
                on_epoch(record)
    finally:
        if pool is not None:
            pool.shutdown()
    return result


def write_training_log(path, log) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("epoch,mean_loss,train_accuracy\n")
        for r in log:
            fh.write(f"{r.epoch},{r.mean_loss:.6f},{r.train_accuracy:.6f}\n")


def read_training_log(path) -> list[EpochRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            EpochRecord(int(row["epoch"]), float(row["mean_loss"]), float(row["train_accuracy"]))
            for row in csv.DictReader(fh)
        ]


def crack_scores(dataset, params, cfg: NetworkConfig, batch_size=64, threads=1) -> np.ndarray:
    """Crack-class probability per patch, in dataset order.

    Patches of different sizes are batched separately.
    """
    dtype = params["fc.w"].dtype
    groups = {}
    for i, p in enumerate(dataset):
        groups.setdefault(p.pixels.shape, []).append(i)
    chunks = [
        idx[i : i + batch_size] for idx in groups.values() for i in range(0, len(idx), batch_size)
    ]

    def run(chunk):
        x = stack_patches([dataset[i].pixels for i in chunk], cfg, dtype)
        return forward(params, x, cfg)[1][:, 1]

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(c) for c in chunks]
    scores = np.zeros(len(dataset), dtype=dtype)
    for chunk, part in zip(chunks, parts):
        scores[chunk] = part
    return scores


def evaluate(dataset, params, cfg: NetworkConfig, threshold=0.5, threads=1) -> MetricsReport:
    if len(dataset) == 0:
        raise InvalidParameterError("cannot evaluate an empty dataset")
    scores = crack_scores(dataset, params, cfg, threads=threads)
    labels = [p.label for p in dataset]
    return compute_metrics(*confusion_counts(labels, scores >= threshold))
