"""Dense layers with explicit forward/backward passes.

Activations are batched as ``(B, C, H, W)``. Single-sample ``(C, H, W)``
inputs are accepted by the public ops and returned without the batch axis.
Each ``*_forward`` returns ``(out, cache)``; the matching ``*_backward``
consumes the cache.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidParameterError

LOG_CLAMP = 1e-12


def _batched(x):
    x = np.asarray(x)
    if x.ndim == 3:
        return x[None], True
    if x.ndim != 4:
        raise InvalidParameterError(f"expected (C, H, W) or (B, C, H, W), got shape {x.shape}")
    return x, False


def conv2d_forward(x, w, b, stride=1, pad=0):
    bsz, c_in, h, wd = x.shape
    c_out, c_w, k, k2 = w.shape
    if c_w != c_in or k != k2:
        raise InvalidParameterError(f"kernel {w.shape} does not match input channels {c_in}")
    if stride < 1:
        raise InvalidParameterError(f"stride must be >= 1, got {stride}")
    ho = (h + 2 * pad - k) // stride + 1
    wo = (wd + 2 * pad - k) // stride + 1
    if ho < 1 or wo < 1 or h + 2 * pad < k or wd + 2 * pad < k:
        raise InvalidParameterError(f"conv output extent non-positive for input {x.shape}, kernel {k}")
    if k == 1 and stride == 1 and pad == 0:
        cols = x.reshape(bsz, c_in, h * wd)
    else:
        xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
        cols = np.empty((bsz, c_in, k, k, ho, wo), dtype=x.dtype)
        for i in range(k):
            for j in range(k):
                cols[:, :, i, j] = xp[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride]
        cols = cols.reshape(bsz, c_in * k * k, ho * wo)
    out = w.reshape(c_out, -1) @ cols + b[None, :, None]
    return out.reshape(bsz, c_out, ho, wo), (cols, x.shape, stride, pad, k)


def conv2d_backward(gout, cache, w):
    cols, xshape, stride, pad, k = cache
    bsz, c_in, h, wd = xshape
    c_out = w.shape[0]
    ho, wo = gout.shape[2:]
    g = gout.reshape(bsz, c_out, ho * wo)
    gw = np.tensordot(g, cols, axes=([0, 2], [0, 2])).reshape(w.shape)
    gb = g.sum(axis=(0, 2))
    gcols = w.reshape(c_out, -1).T @ g
    if k == 1 and stride == 1 and pad == 0:
        return gcols.reshape(xshape), gw, gb
    gcols = gcols.reshape(bsz, c_in, k, k, ho, wo)
    gxp = np.zeros((bsz, c_in, h + 2 * pad, wd + 2 * pad), dtype=gout.dtype)
    for i in range(k):
        for j in range(k):
            gxp[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride] += gcols[:, :, i, j]
    if pad:
        gxp = gxp[:, :, pad:-pad, pad:-pad]
    return gxp, gw, gb


def conv2d(x, w, b, stride=1, pad=0):
    """Zero-padded cross-correlation plus per-channel bias."""
    xb, single = _batched(x)
    out, _ = conv2d_forward(xb, np.asarray(w), np.asarray(b), stride, pad)
    return out[0] if single else out


def maxpool2_forward(x):
    bsz, c, h, w = x.shape
    if h < 2 or w < 2:
        raise InvalidParameterError(f"maxpool2 needs H, W >= 2, got {h}x{w}")
    ho, wo = h // 2, w // 2
    win = x[:, :, : 2 * ho, : 2 * wo].reshape(bsz, c, ho, 2, wo, 2)
    win = win.transpose(0, 1, 2, 4, 3, 5).reshape(bsz, c, ho, wo, 4)
    idx = win.argmax(axis=-1)
    out = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]
    return out, (idx, x.shape)


def maxpool2_backward(gout, cache):
    idx, xshape = cache
    bsz, c, h, w = xshape
    ho, wo = gout.shape[2:]
    gwin = np.zeros((bsz, c, ho, wo, 4), dtype=gout.dtype)
    np.put_along_axis(gwin, idx[..., None], gout[..., None], axis=-1)
    gwin = gwin.reshape(bsz, c, ho, wo, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(bsz, c, 2 * ho, 2 * wo)
    gx = np.zeros(xshape, dtype=gout.dtype)
    gx[:, :, : 2 * ho, : 2 * wo] = gwin
    return gx


def maxpool2(x):
    """2x2 max pooling with stride 2; a trailing odd row/column is dropped."""
    xb, single = _batched(x)
    out, _ = maxpool2_forward(xb)
    return out[0] if single else out


def relu(x):
    return np.maximum(x, 0)


def relu_backward(gout, x):
    return gout * (x > 0)


def fire_forward(x, p, prefix):
    """Squeeze (1x1) then parallel 1x1 / 3x3 expand, concatenated, then relu."""
    s_pre, c_sq = conv2d_forward(x, p[f"{prefix}.squeeze.w"], p[f"{prefix}.squeeze.b"])
    s = relu(s_pre)
    e1, c_e1 = conv2d_forward(s, p[f"{prefix}.expand1x1.w"], p[f"{prefix}.expand1x1.b"])
    e3, c_e3 = conv2d_forward(s, p[f"{prefix}.expand3x3.w"], p[f"{prefix}.expand3x3.b"], 1, 1)
    pre = np.concatenate([e1, e3], axis=1)
    return relu(pre), (s_pre, s, pre, c_sq, c_e1, c_e3, e1.shape[1])


def fire_backward(gout, cache, p, prefix, grads):
    s_pre, s, pre, c_sq, c_e1, c_e3, n1 = cache
    g = relu_backward(gout, pre)
    gs1, grads[f"{prefix}.expand1x1.w"], grads[f"{prefix}.expand1x1.b"] = conv2d_backward(
        g[:, :n1], c_e1, p[f"{prefix}.expand1x1.w"]
    )
    gs3, grads[f"{prefix}.expand3x3.w"], grads[f"{prefix}.expand3x3.b"] = conv2d_backward(
        g[:, n1:], c_e3, p[f"{prefix}.expand3x3.w"]
    )
    gs = relu_backward(gs1 + gs3, s_pre)
    gx, grads[f"{prefix}.squeeze.w"], grads[f"{prefix}.squeeze.b"] = conv2d_backward(
        gs, c_sq, p[f"{prefix}.squeeze.w"]
    )
    return gx


def linear(x, weight, bias):
    """``weight @ x + bias`` for a vector or a batch of row vectors."""
    x = np.asarray(x)
    weight = np.asarray(weight)
    bias = np.asarray(bias)
    if weight.ndim != 2 or x.shape[-1] != weight.shape[1] or bias.shape != (weight.shape[0],):
        raise InvalidParameterError(
            f"linear shapes disagree: input {x.shape}, weight {weight.shape}, bias {bias.shape}"
        )
    return x @ weight.T + bias


def softmax(z):
    z = np.asarray(z)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy_loss(probs, label):
    """Negative log-likelihood of ``label`` under a softmax output.

    Works on a single probability vector or a ``(B, 2)`` batch; with two
    classes this is binary cross entropy on the crack probability.
    """
    probs = np.asarray(probs)
    labels = np.asarray(label)
    if not np.all((labels == 0) | (labels == 1)):
        raise InvalidParameterError(f"labels must be 0 or 1, got {label}")
    labels = labels.astype(np.intp)
    picked = np.take_along_axis(probs, labels[..., None], axis=-1)[..., 0] if probs.ndim > 1 else probs[labels]
    return -np.log(np.clip(picked, LOG_CLAMP, 1.0))


def softmax_cross_entropy_backward(probs, labels):
    """Gradient of the summed loss with respect to the logits."""
    g = probs.copy()
    rows = np.arange(len(labels))
    g[rows, labels] -= 1
    # the clamp flattens the loss where it engages
    g[probs[rows, labels] < LOG_CLAMP] = 0
    return g
