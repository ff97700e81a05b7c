"""Residual texture encoding: soft-assigned residuals to learned codewords.

Each of the N descriptors ``f_i`` (rows of a ``(N, D)`` matrix) is softly
assigned to K codewords ``c_k`` with weights

    a_ik = exp(-s_k |f_i - c_k|^2) / sum_j exp(-s_j |f_i - c_j|^2)

and the residuals are pooled per codeword, ``e_k = mean_i a_ik (f_i - c_k)``.
The concatenated ``(e_1 .. e_K)`` is L2-normalised, giving a ``K * D``
vector whatever N is.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidParameterError


def _check(features, codewords, smoothing):
    if features.shape[-1] != codewords.shape[1]:
        raise InvalidParameterError(
            f"descriptor dim {features.shape[-1]} does not match codewords {codewords.shape}"
        )
    if smoothing.shape != (codewords.shape[0],):
        raise InvalidParameterError(f"smoothing shape {smoothing.shape} != ({codewords.shape[0]},)")
    if features.shape[-2] < 1:
        raise InvalidParameterError("encoding needs at least one descriptor")


def squared_distances(features, codewords):
    """``|f_i - c_k|^2`` for batched ``(B, N, D)`` features, shape ``(B, N, K)``."""
    ff = np.einsum("bnd,bnd->bn", features, features)[..., None]
    cc = np.einsum("kd,kd->k", codewords, codewords)
    d = ff - 2.0 * (features @ codewords.T) + cc
    return np.maximum(d, 0)


def assignment_weights(features, codewords, smoothing):
    """Soft assignments ``(B, N, K)``; each row sums to one."""
    d = squared_distances(features, codewords)
    z = -smoothing * d
    z = z - z.max(axis=-1, keepdims=True)
    a = np.exp(z)
    a /= a.sum(axis=-1, keepdims=True)
    return a, d


def encoding_forward_batch(features, codewords, smoothing):
    _check(features, codewords, smoothing)
    bsz, n, dim = features.shape
    a, d = assignment_weights(features, codewords, smoothing)
    # sum_i a_ik (f_i - c_k) = (A^T F)_k - (sum_i a_ik) c_k
    mass = a.sum(axis=1)
    e = (np.swapaxes(a, 1, 2) @ features - mass[..., None] * codewords) / n
    v = e.reshape(bsz, -1)
    norm = np.sqrt(np.einsum("bj,bj->b", v, v))
    safe = np.where(norm > 0, norm, 1)
    out = v / safe[:, None]
    return out, (features, a, d, mass, out, norm, codewords, smoothing)


def encoding_backward_batch(gout, cache):
    """Return ``(g_features, g_codewords, g_smoothing)``; parameter grads are batch sums."""
    features, a, d, mass, out, norm, codewords, smoothing = cache
    bsz, n, dim = features.shape
    k = codewords.shape[0]
    nz = norm > 0
    proj = np.einsum("bj,bj->b", out, gout)
    gv = np.where(nz[:, None], (gout - out * proj[:, None]) / np.where(nz, norm, 1)[:, None], gout)
    ge = gv.reshape(bsz, k, dim) / n

    # through the residual sum e_k = sum_i a_ik (f_i - c_k) (1/N folded into ge)
    ga = features @ np.swapaxes(ge, 1, 2) - np.einsum("bkd,kd->bk", ge, codewords)[:, None, :]
    gf = a @ ge
    gc = -np.einsum("bk,bkd->kd", mass, ge)

    # softmax over codewords, then z = -s_k d_ik
    gz = a * (ga - np.einsum("bnk,bnk->bn", a, ga)[..., None])
    gs = -np.einsum("bnk,bnk->k", gz, d)
    gd = -smoothing * gz

    # d_ik = |f_i - c_k|^2
    gf += 2.0 * (gd.sum(axis=-1)[..., None] * features - gd @ codewords)
    gc -= 2.0 * (np.einsum("bnk,bnd->kd", gd, features) - gd.sum(axis=(0, 1))[:, None] * codewords)
    return gf, gc, gs


def encoding_forward(features, codewords, smoothing):
    """Encode one ``(N, D)`` descriptor set into a length ``K * D`` vector."""
    features = np.asarray(features)
    if features.ndim != 2:
        raise InvalidParameterError(f"features must be (N, D), got {features.shape}")
    out, _ = encoding_forward_batch(features[None], np.asarray(codewords), np.asarray(smoothing))
    return out[0]
