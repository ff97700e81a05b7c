"""Finite-difference check of the analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import FIRE_NAMES, SMALL_CONFIG
from .network import cast_params, forward, init_params, loss_and_grads


@dataclass
class GradCheckReport:
    max_relative_error: float
    worst: tuple  # (param name, index)
    checked: int
    # coordinates whose +-h stencil flips a relu or max-pool switch
    skipped: int


def relative_error(analytic, numeric, floor=1e-6):
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def check_point(cfg=SMALL_CONFIG, seed=0):
    """Float64 parameters at a generic point.

    Freshly initialised zero biases leave many units exactly at the relu
    kink, where finite differences are meaningless, so biases are drawn
    from U(-0.1, 0.1) instead.
    """
    rng = np.random.default_rng([seed, 7])
    params = cast_params(init_params(cfg, seed), np.float64)
    for name, value in params.items():
        if name.endswith(".b"):
            value[...] = rng.uniform(-0.1, 0.1, value.shape)
    return params


def activation_pattern(params, x, cfg) -> bytes:
    """Relu on/off states and max-pool winners for a batch, as bytes."""
    _, _, cache = forward(params, x, cfg, keep_cache=True)
    parts = [cache["conv1.pre"] > 0, cache["pool1"][0], cache["pool2"][0]]
    for name in FIRE_NAMES:
        s_pre, _, pre = cache[name][:3]
        parts += [s_pre > 0, pre > 0]
    return b"".join(np.ascontiguousarray(p).tobytes() for p in parts)


def gradient_check(cfg=SMALL_CONFIG, seed=0, h=1e-5, batch=2) -> GradCheckReport:
    """Compare analytic and central-difference gradients for every coordinate.

    Runs in float64. Relative error is ``|a - n| / max(|a|, |n|, 1e-6)``;
    the floor keeps round-off on near-zero gradients from dominating.
    """
    rng = np.random.default_rng(seed)
    params = check_point(cfg, seed)
    x = rng.uniform(-0.5, 0.5, (batch, cfg.in_channels, cfg.patch_size, cfg.patch_size))
    y = np.arange(batch) % 2
    _, _, grads = loss_and_grads(params, x, y, cfg)
    base = activation_pattern(params, x, cfg)
    worst, worst_at, checked, skipped = 0.0, None, 0, 0
    for name, value in params.items():
        for idx in np.ndindex(value.shape):
            orig = value[idx]
            value[idx] = orig + h
            up = loss_and_grads(params, x, y, cfg)[0].sum()
            kinked = activation_pattern(params, x, cfg) != base
            value[idx] = orig - h
            down = loss_and_grads(params, x, y, cfg)[0].sum()
            kinked = kinked or activation_pattern(params, x, cfg) != base
            value[idx] = orig
            if kinked:
                skipped += 1
                continue
            checked += 1
            err = relative_error(grads[name][idx], (up - down) / (2 * h))
            if err > worst or worst_at is None:
                worst, worst_at = err, (name, idx)
    return GradCheckReport(worst, worst_at, checked, skipped)
