"""The full patch classifier: conv1 -> pool -> fire2 -> fire3 -> pool -> fire4
-> residual encoding -> fully connected -> softmax."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidParameterError
from ..imgproc import to_grayscale
from . import layers
from .config import FIRE_NAMES, NetworkConfig, param_shapes, spatial_after_stack
from .encoding import encoding_backward_batch, encoding_forward_batch


def init_params(cfg: NetworkConfig, seed: int = 0, dtype=np.float32) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in param_shapes(cfg).items():
        if name == "encoding.codewords":
            bound = 1.0 / np.sqrt(shape[1])
            value = rng.uniform(-bound, bound, shape)
        elif name == "encoding.smoothing":
            value = np.ones(shape)
        elif name.endswith(".b"):
            value = np.zeros(shape)
        else:
            fan_in = int(np.prod(shape[1:]))
            bound = np.sqrt(6.0 / fan_in)
            value = rng.uniform(-bound, bound, shape)
        params[name] = value.astype(dtype)
    return params


def zeros_like_params(params):
    return {k: np.zeros_like(v) for k, v in params.items()}


def cast_params(params, dtype):
    return {k: v.astype(dtype) for k, v in params.items()}


def check_params(params, cfg: NetworkConfig):
    expected = param_shapes(cfg)
    if list(params) != list(expected):
        missing = set(expected) ^ set(params)
        raise InvalidParameterError(f"parameter names differ from config: {sorted(missing)}")
    for name, shape in expected.items():
        if params[name].shape != shape:
            raise InvalidParameterError(f"{name} has shape {params[name].shape}, expected {shape}")


# pixels are scaled to [0, 1] then centred; uncentred inputs stall early training
INPUT_OFFSET = 0.5


def patch_to_tensor(pixels: np.ndarray, cfg: NetworkConfig, dtype=np.float32) -> np.ndarray:
    """``uint8`` patch ``(H, W)`` or ``(H, W, 3)`` -> ``(C, H, W)`` in [-0.5, 0.5]."""
    pixels = np.asarray(pixels)
    if pixels.ndim == 2:
        x = np.repeat(pixels[None], cfg.in_channels, axis=0)
    elif pixels.ndim == 3 and pixels.shape[2] == 3:
        if cfg.in_channels == 3:
            x = pixels.transpose(2, 0, 1)
        else:
            x = to_grayscale(pixels)[None]
    else:
        raise InvalidParameterError(f"unsupported patch shape {pixels.shape}")
    dtype = np.dtype(dtype).type
    return x.astype(dtype) / dtype(255.0) - dtype(INPUT_OFFSET)


def stack_patches(patches, cfg: NetworkConfig, dtype=np.float32) -> np.ndarray:
    return np.stack([patch_to_tensor(p, cfg, dtype) for p in patches])


def forward(params, x, cfg: NetworkConfig, keep_cache=False):
    """Run a ``(B, C, H, W)`` batch; returns ``(logits, probs, cache)``."""
    if x.ndim != 4 or x.shape[1] != cfg.in_channels:
        raise InvalidParameterError(f"expected (B, {cfg.in_channels}, H, W) input, got {x.shape}")
    if min(spatial_after_stack(x.shape[2]), spatial_after_stack(x.shape[3])) < 1:
        raise InvalidParameterError(f"patch {x.shape[2]}x{x.shape[3]} too small for the network")
    cache = {}
    h, cache["conv1"] = layers.conv2d_forward(x, params["conv1.w"], params["conv1.b"], stride=2, pad=1)
    cache["conv1.pre"] = h
    h = layers.relu(h)
    h, cache["pool1"] = layers.maxpool2_forward(h)
    h, cache["fire2"] = layers.fire_forward(h, params, "fire2")
    h, cache["fire3"] = layers.fire_forward(h, params, "fire3")
    h, cache["pool2"] = layers.maxpool2_forward(h)
    h, cache["fire4"] = layers.fire_forward(h, params, "fire4")
    bsz, dim, hh, ww = h.shape
    cache["fire4.shape"] = h.shape
    feats = h.reshape(bsz, dim, hh * ww).transpose(0, 2, 1)
    enc, cache["encoding"] = encoding_forward_batch(
        feats, params["encoding.codewords"], params["encoding.smoothing"]
    )
    cache["encoded"] = enc
    logits = layers.linear(enc, params["fc.w"], params["fc.b"])
    probs = layers.softmax(logits)
    return logits, probs, (cache if keep_cache else None)


def encode_batch(params, x, cfg):
    """Just the fixed-length encoding vectors for a batch, shape ``(B, K * D)``."""
    _, _, cache = forward(params, x, cfg, keep_cache=True)
    return cache["encoded"]


def loss_and_grads(params, x, labels, cfg: NetworkConfig):
    """Per-sample losses and parameter gradients summed over the batch."""
    labels = np.asarray(labels, dtype=np.intp)
    _, probs, cache = forward(params, x, cfg, keep_cache=True)
    losses = layers.cross_entropy_loss(probs, labels)
    grads = {}
    g = layers.softmax_cross_entropy_backward(probs, labels)
    grads["fc.w"] = g.T @ cache["encoded"]
    grads["fc.b"] = g.sum(axis=0)
    g = g @ params["fc.w"]
    gf, grads["encoding.codewords"], grads["encoding.smoothing"] = encoding_backward_batch(
        g, cache["encoding"]
    )
    bsz, dim, hh, ww = cache["fire4.shape"]
    g = gf.transpose(0, 2, 1).reshape(bsz, dim, hh, ww)
    g = layers.fire_backward(g, cache["fire4"], params, "fire4", grads)
    g = layers.maxpool2_backward(g, cache["pool2"])
    for name in reversed(FIRE_NAMES[:2]):
        g = layers.fire_backward(g, cache[name], params, name, grads)
    g = layers.maxpool2_backward(g, cache["pool1"])
    g = layers.relu_backward(g, cache["conv1.pre"])
    _, grads["conv1.w"], grads["conv1.b"] = layers.conv2d_backward(g, cache["conv1"], params["conv1.w"])
    ordered = {name: grads[name].astype(params[name].dtype, copy=False) for name in params}
    return losses, probs, ordered


def network_forward(pixels, params, cfg: NetworkConfig):
    """Classify one ``uint8`` patch; returns ``(logits, probs)`` of length 2."""
    dtype = params["fc.w"].dtype
    x = patch_to_tensor(pixels, cfg, dtype)[None]
    logits, probs, _ = forward(params, x, cfg)
    return logits[0], probs[0]


def backward(pixels, label, params, cfg: NetworkConfig):
    """Loss and gradients for a single labelled patch."""
    dtype = params["fc.w"].dtype
    x = patch_to_tensor(pixels, cfg, dtype)[None]
    losses, _, grads = loss_and_grads(params, x, [label], cfg)
    return float(losses[0]), grads


def predict_proba(params, patches, cfg: NetworkConfig, batch_size=64):
    """Crack-class probability for each ``uint8`` patch."""
    dtype = params["fc.w"].dtype
    out = []
    for start in range(0, len(patches), batch_size):
        x = stack_patches(patches[start : start + batch_size], cfg, dtype)
        _, probs, _ = forward(params, x, cfg)
        out.append(probs[:, 1])
    if not out:
        return np.zeros(0, dtype=dtype)
    return np.concatenate(out)
