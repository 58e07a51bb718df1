"""Convolution primitives with explicit reverse-mode gradients.

All functions work on single-sample channel-first tensors (C, H, W) in
double precision. Forward passes return whatever intermediate state the
matching backward pass needs, so the layers themselves stay stateless.
"""

from __future__ import annotations

import numpy as np


def conv2d_forward(x, w, b, stride=1, pad=1):
    """3x3-style convolution. x (Cin, H, W), w (Cout, Cin, kh, kw), b (Cout,).

    Returns (y, cols) where cols is the gathered patch tensor reused by the
    backward pass.
    """
    cin, h, wd = x.shape
    cout, _, kh, kw = w.shape
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (wd + 2 * pad - kw) // stride + 1
    cols = np.empty((cin, kh, kw, ho, wo))
    for ky in range(kh):
        for kx in range(kw):
            cols[:, ky, kx] = xp[
                :, ky : ky + ho * stride : stride, kx : kx + wo * stride : stride
            ]
    y = np.tensordot(w, cols, axes=([1, 2, 3], [0, 1, 2])) + b[:, None, None]
    return y, cols


def conv2d_backward(gy, x_shape, w, cols, stride=1, pad=1):
    """Gradients of conv2d_forward. gy (Cout, Ho, Wo) -> (gx, gw, gb)."""
    cout, ho, wo = gy.shape
    cin, h, wd = x_shape
    kh, kw = w.shape[2], w.shape[3]
    gw = np.tensordot(gy, cols, axes=([1, 2], [3, 4]))
    gb = gy.sum(axis=(1, 2))
    gcols = np.tensordot(w, gy, axes=(0, 0))  # (Cin, kh, kw, Ho, Wo)
    gxp = np.zeros((cin, h + 2 * pad, wd + 2 * pad))
    for ky in range(kh):
        for kx in range(kw):
            gxp[:, ky : ky + ho * stride : stride, kx : kx + wo * stride : stride] += (
                gcols[:, ky, kx]
            )
    gx = gxp[:, pad : pad + h, pad : pad + wd] if pad else gxp
    return gx, gw, gb


def upconv_forward(x, w, b):
    """Transposed convolution with kernel size equal to stride (no overlap).

    x (Cin, H, W), w (Cin, Cout, k, k) -> y (Cout, H*k, W*k). Each input
    cell paints an independent k x k stamp, which keeps the gradient exact
    and cheap.
    """
    cin, h, wd = x.shape
    cout, k = w.shape[1], w.shape[2]
    y5 = np.einsum("chw,codk->ohdwk", x, w, optimize=True)
    y = y5.reshape(cout, h * k, wd * k) + b[:, None, None]
    return y


def upconv_backward(gy, x, w):
    """Gradients of upconv_forward. gy (Cout, H*k, W*k) -> (gx, gw, gb)."""
    cin, h, wd = x.shape
    cout, k = w.shape[1], w.shape[2]
    gy5 = gy.reshape(cout, h, k, wd, k)
    gx = np.einsum("ohdwk,codk->chw", gy5, w, optimize=True)
    gw = np.einsum("chw,ohdwk->codk", x, gy5, optimize=True)
    gb = gy.sum(axis=(1, 2))
    return gx, gw, gb


def relu_forward(x):
    return np.maximum(x, 0.0), x > 0


def relu_backward(gy, mask):
    return gy * mask


def softmax_channels(z):
    """Softmax over the leading channel axis of (Q, H, W)."""
    shift = z - z.max(axis=0, keepdims=True)
    e = np.exp(shift)
    return e / e.sum(axis=0, keepdims=True)
