"""Dense-tensor layers with hand-written forward and backward passes.

Everything is float64 and batched: inputs carry a leading batch axis
[B, C, H, W]. Convolutions are stride-1, zero-padding-1, 3x3 unless the
layer says otherwise; pooling is 2x2 stride 2 in ceil mode (odd spatial
dims get an implicit -inf pad so 7 -> 4, keeping the flatten width at
128*4*4 = 2048).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ConvLayer:
    weights: np.ndarray  # [F, C, K, K]
    bias: np.ndarray     # [F]
    stride: int = 1
    padding: int = 1

    @property
    def n_params(self) -> int:
        return self.weights.size + self.bias.size


@dataclass
class LinearLayer:
    weights: np.ndarray  # [out, in]
    bias: np.ndarray     # [out]

    @property
    def n_params(self) -> int:
        return self.weights.size + self.bias.size


def xavier_uniform_init(shape, rng: np.random.Generator) -> np.ndarray:
    """U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).

    Fan counts follow the usual conventions: [out, in] for linear weights,
    [F, C, K, K] -> (C*K*K, F*K*K) for conv filters.
    """
    shape = tuple(shape)
    if len(shape) == 2:
        fan_out, fan_in = shape
    elif len(shape) == 4:
        f, c, kh, kw = shape
        fan_in = c * kh * kw
        fan_out = f * kh * kw
    else:
        raise ValueError(f"unsupported shape for Xavier init: {shape}")
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=shape)


# ---------------------------------------------------------------------------
# convolution

def conv2d_forward(x: np.ndarray, layer: ConvLayer):
    """Zero-padded cross-correlation. x: [B, C, H, W] -> [B, F, H, W].

    Returns (out, cache); cache feeds conv2d_backward.
    """
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 3
    if squeeze:
        x = x[None]
    batch, c, h, w = x.shape
    f, cw, k, _ = layer.weights.shape
    if c != cw:
        raise ValueError(f"input has {c} channels, filters expect {cw}")
    p = layer.padding
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
    oh = h + 2 * p - k + 1
    ow = w + 2 * p - k + 1
    windows = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(2, 3))
    # [B, C, OH, OW, K, K] -> [B*OH*OW, C*K*K]
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(batch * oh * ow, c * k * k)
    wmat = layer.weights.reshape(f, c * k * k)
    out = cols @ wmat.T + layer.bias
    out = out.reshape(batch, oh, ow, f).transpose(0, 3, 1, 2)
    cache = (cols, x.shape, layer)
    if squeeze:
        out = out[0]
    return np.ascontiguousarray(out), cache


def conv2d_backward(upstream: np.ndarray, cache):
    """Gradients of conv2d_forward. Returns (d_x, d_weights, d_bias)."""
    cols, x_shape, layer = cache
    upstream = np.asarray(upstream, dtype=np.float64)
    squeeze = upstream.ndim == 3
    if squeeze:
        upstream = upstream[None]
    batch, c, h, w = x_shape
    f, _, k, _ = layer.weights.shape
    p = layer.padding
    oh, ow = upstream.shape[2], upstream.shape[3]
    up_mat = upstream.transpose(0, 2, 3, 1).reshape(batch * oh * ow, f)

    d_bias = up_mat.sum(axis=0)
    d_weights = (up_mat.T @ cols).reshape(layer.weights.shape)

    d_cols = up_mat @ layer.weights.reshape(f, c * k * k)
    d_cols = d_cols.reshape(batch, oh, ow, c, k, k)
    d_xp = np.zeros((batch, c, h + 2 * p, w + 2 * p))
    for m in range(k):
        for n in range(k):
            d_xp[:, :, m:m + oh, n:n + ow] += d_cols[:, :, :, :, m, n].transpose(0, 3, 1, 2)
    d_x = d_xp[:, :, p:p + h, p:p + w]
    if squeeze:
        d_x = d_x[0]
    return d_x, d_weights, d_bias


# ---------------------------------------------------------------------------
# activations / pooling / dropout

def relu_forward(x: np.ndarray):
    out = np.maximum(x, 0.0)
    return out, x


def relu_backward(upstream: np.ndarray, cache) -> np.ndarray:
    # subgradient 0 at x == 0
    return np.where(cache > 0.0, upstream, 0.0)


def maxpool2x2_forward(x: np.ndarray):
    """2x2 stride-2 max pool, ceil mode: odd dims are padded with -inf.

    Ties within a window go to the first element in row-major scan order.
    Returns (out, cache).
    """
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 3
    if squeeze:
        x = x[None]
    batch, c, h, w = x.shape
    oh, ow = (h + 1) // 2, (w + 1) // 2
    ph, pw = 2 * oh - h, 2 * ow - w
    xp = np.pad(x, ((0, 0), (0, 0), (0, ph), (0, pw)), constant_values=-np.inf)
    windows = xp.reshape(batch, c, oh, 2, ow, 2).transpose(0, 1, 2, 4, 3, 5)
    flat = windows.reshape(batch, c, oh, ow, 4)
    arg = flat.argmax(axis=-1)  # first max in row-major window order
    out = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]
    cache = (arg, x.shape, (oh, ow))
    if squeeze:
        out = out[0]
    return out, cache


def maxpool2x2_backward(upstream: np.ndarray, cache) -> np.ndarray:
    arg, x_shape, (oh, ow) = cache
    upstream = np.asarray(upstream, dtype=np.float64)
    squeeze = upstream.ndim == 3
    if squeeze:
        upstream = upstream[None]
    batch, c, h, w = x_shape
    d_flat = np.zeros((batch, c, oh, ow, 4))
    np.put_along_axis(d_flat, arg[..., None], upstream[..., None], axis=-1)
    d_xp = d_flat.reshape(batch, c, oh, ow, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    d_xp = d_xp.reshape(batch, c, 2 * oh, 2 * ow)
    d_x = d_xp[:, :, :h, :w]
    if squeeze:
        d_x = d_x[0]
    return np.ascontiguousarray(d_x)


def dropout_forward(x: np.ndarray, p: float, training: bool,
                    rng: np.random.Generator | None = None):
    """Inverted dropout: survivors scaled by 1/(1-p); identity in eval mode."""
    if not training or p == 0.0:
        return x, None
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout rate {p} outside [0, 1)")
    if rng is None:
        raise ValueError("training-mode dropout needs an explicit rng")
    mask = (rng.random(x.shape) >= p) / (1.0 - p)
    return x * mask, mask


def dropout_backward(upstream: np.ndarray, mask) -> np.ndarray:
    if mask is None:
        return upstream
    return upstream * mask


# ---------------------------------------------------------------------------
# linear

def linear_forward(x: np.ndarray, layer: LinearLayer):
    """x: [B, in] -> [B, out]. Returns (out, cache)."""
    x = np.asarray(x, dtype=np.float64)
    out = x @ layer.weights.T + layer.bias
    return out, (x, layer)


def linear_backward(upstream: np.ndarray, cache):
    """Returns (d_x, d_weights, d_bias)."""
    x, layer = cache
    d_x = upstream @ layer.weights
    d_weights = upstream.T @ x
    d_bias = upstream.sum(axis=0)
    return d_x, d_weights, d_bias
