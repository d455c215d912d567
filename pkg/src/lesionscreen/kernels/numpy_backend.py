"""Pure-numpy kernel implementations.

Reference semantics for every hot loop in the package. The numba backend
mirrors these formulas operation-for-operation; keep the two in sync.

Conventions shared by both backends:
  - resampling uses half-pixel-center coordinates:
        src = (dst + 0.5) * (in_size / out_size) - 0.5, clamped to [0, in-1]
  - interpolation weights and dot products accumulate in float64,
    results are stored as float32
  - hue is degrees in [0, 360); saturation and value are in [0, 1]
"""

from __future__ import annotations

import numpy as np


def bilinear_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize (h, w, c) float32 image to (out_h, out_w, c)."""
    in_h, in_w = img.shape[0], img.shape[1]
    sy = (np.arange(out_h, dtype=np.float64) + 0.5) * (in_h / out_h) - 0.5
    sx = (np.arange(out_w, dtype=np.float64) + 0.5) * (in_w / out_w) - 0.5
    sy = np.clip(sy, 0.0, in_h - 1.0)
    sx = np.clip(sx, 0.0, in_w - 1.0)
    y0 = np.floor(sy).astype(np.int64)
    x0 = np.floor(sx).astype(np.int64)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    fy = (sy - y0)[:, None, None]
    fx = (sx - x0)[None, :, None]
    p = img.astype(np.float64)
    p00 = p[y0][:, x0]
    p01 = p[y0][:, x1]
    p10 = p[y1][:, x0]
    p11 = p[y1][:, x1]
    out = (
        ((1.0 - fy) * (1.0 - fx)) * p00
        + ((1.0 - fy) * fx) * p01
        + (fy * (1.0 - fx)) * p10
        + (fy * fx) * p11
    )
    return out.astype(np.float32)


def rgb_to_hsv_image(rgb: np.ndarray) -> np.ndarray:
    """Convert (h, w, 3) float32 RGB in [0, 255] to HSV planes."""
    r = rgb[..., 0].astype(np.float64)
    g = rgb[..., 1].astype(np.float64)
    b = rgb[..., 2].astype(np.float64)
    mx = np.maximum(np.maximum(r, g), b)
    mn = np.minimum(np.minimum(r, g), b)
    delta = mx - mn
    safe_delta = np.where(delta == 0.0, 1.0, delta)
    h_r = 60.0 * (((g - b) / safe_delta) % 6.0)
    h_g = 60.0 * ((b - r) / safe_delta + 2.0)
    h_b = 60.0 * ((r - g) / safe_delta + 4.0)
    h = np.where(mx == r, h_r, np.where(mx == g, h_g, h_b))
    h = np.where(delta == 0.0, 0.0, h)
    h = np.where(h >= 360.0, h - 360.0, h)
    s = np.where(mx == 0.0, 0.0, delta / np.where(mx == 0.0, 1.0, mx))
    v = mx / 255.0
    return np.stack([h, s, v], axis=-1).astype(np.float32)


def hsv_adjust_to_rgb(
    hsv: np.ndarray, hue_shift: float, sat_scale: float, val_scale: float
) -> np.ndarray:
    """Shift hue, scale s/v (clamped to [0, 1]), convert back to uint8 RGB.

    Channel rounding is round-half-up: floor(x + 0.5).
    """
    h = (hsv[..., 0].astype(np.float64) + hue_shift) % 360.0
    s = np.clip(hsv[..., 1].astype(np.float64) * sat_scale, 0.0, 1.0)
    v = np.clip(hsv[..., 2].astype(np.float64) * val_scale, 0.0, 1.0)
    c = v * s
    hp = h / 60.0
    x = c * (1.0 - np.abs(hp % 2.0 - 1.0))
    sextant = np.minimum(hp.astype(np.int64), 5)
    zero = np.zeros_like(c)
    r1 = np.choose(sextant, [c, x, zero, zero, x, c])
    g1 = np.choose(sextant, [x, c, c, x, zero, zero])
    b1 = np.choose(sextant, [zero, zero, x, c, c, x])
    m = v - c
    out = np.stack([r1 + m, g1 + m, b1 + m], axis=-1) * 255.0
    return np.clip(np.floor(out + 0.5), 0.0, 255.0).astype(np.uint8)


def affine_warp(img: np.ndarray, inv: np.ndarray) -> np.ndarray:
    """Warp (h, w, c) float32 image by the inverse 2x3 pixel-coordinate map.

    Source coordinates outside the image reflect about the borders
    (no edge repeat), then sample bilinearly.
    """
    h, w = img.shape[0], img.shape[1]
    oy, ox = np.meshgrid(
        np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij"
    )
    sx = inv[0, 0] * ox + inv[0, 1] * oy + inv[0, 2]
    sy = inv[1, 0] * ox + inv[1, 1] * oy + inv[1, 2]
    sx = _reflect(sx, w)
    sy = _reflect(sy, h)
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (sx - x0)[..., None]
    fy = (sy - y0)[..., None]
    p = img.astype(np.float64)
    p00 = p[y0, x0]
    p01 = p[y0, x1]
    p10 = p[y1, x0]
    p11 = p[y1, x1]
    out = (
        ((1.0 - fy) * (1.0 - fx)) * p00
        + ((1.0 - fy) * fx) * p01
        + (fy * (1.0 - fx)) * p10
        + (fy * fx) * p11
    )
    return out.astype(np.float32)


def _reflect(t: np.ndarray, n: int) -> np.ndarray:
    if n == 1:
        return np.zeros_like(t)
    period = 2.0 * (n - 1)
    t = np.abs(t) % period
    return np.where(t > n - 1, period - t, t)


def conv2d(
    x: np.ndarray, weight: np.ndarray, bias: np.ndarray, stride: int, pad: int
) -> np.ndarray:
    """Direct convolution: x (n,c,h,w) float32, weight (o,c,k,k), bias (o,)."""
    n, c, h, w = x.shape
    o, _, k, _ = weight.shape
    oh = (h + 2 * pad - k) // stride + 1
    ow = (w + 2 * pad - k) // stride + 1
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))).astype(np.float64)
    cols = np.empty((n, c, k, k, oh, ow), dtype=np.float64)
    for ky in range(k):
        for kx in range(k):
            cols[:, :, ky, kx] = xp[
                :, :, ky : ky + stride * oh : stride, kx : kx + stride * ow : stride
            ]
    out = np.tensordot(cols, weight.astype(np.float64), axes=([1, 2, 3], [1, 2, 3]))
    out = out.transpose(0, 3, 1, 2) + bias.astype(np.float64)[None, :, None, None]
    return out.astype(np.float32)


def maxpool2d(x: np.ndarray, k: int, stride: int) -> tuple[np.ndarray, np.ndarray]:
    """Max pooling; also returns the flat (y * w + x) source index per output.

    Ties resolve to the first window position in row-major scan order.
    """
    n, c, h, w = x.shape
    oh = (h - k) // stride + 1
    ow = (w - k) // stride + 1
    out = np.full((n, c, oh, ow), -np.inf, dtype=np.float32)
    arg = np.zeros((n, c, oh, ow), dtype=np.int64)
    ys = np.arange(oh) * stride
    xs = np.arange(ow) * stride
    for ky in range(k):
        for kx in range(k):
            window = x[:, :, ky : ky + stride * oh : stride, kx : kx + stride * ow : stride]
            flat = ((ys + ky)[:, None] * w + (xs + kx)[None, :])[None, None]
            better = window > out
            out = np.where(better, window, out)
            arg = np.where(better, flat, arg)
    return out, arg


def dense(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Fully connected layer: x (n,d) float32, weight (o,d), bias (o,)."""
    out = x.astype(np.float64) @ weight.astype(np.float64).T + bias.astype(np.float64)
    return out.astype(np.float32)


def laplacian_variance(gray: np.ndarray) -> float:
    """Variance of the 3x3 four-neighbour Laplacian over the valid region."""
    h, w = gray.shape
    if h < 3 or w < 3:
        return 0.0
    g = gray.astype(np.float64)
    resp = (
        g[:-2, 1:-1] + g[2:, 1:-1] + g[1:-1, :-2] + g[1:-1, 2:] - 4.0 * g[1:-1, 1:-1]
    )
    return float(resp.var())
