"""Numba-compiled kernels. Formula-for-formula mirror of numpy_backend."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def bilinear_resize(img, out_h, out_w):
    in_h, in_w, ch = img.shape
    scale_y = in_h / out_h
    scale_x = in_w / out_w
    out = np.empty((out_h, out_w, ch), dtype=np.float32)
    for oy in range(out_h):
        sy = (oy + 0.5) * scale_y - 0.5
        if sy < 0.0:
            sy = 0.0
        if sy > in_h - 1.0:
            sy = in_h - 1.0
        y0 = int(np.floor(sy))
        y1 = min(y0 + 1, in_h - 1)
        fy = sy - y0
        for ox in range(out_w):
            sx = (ox + 0.5) * scale_x - 0.5
            if sx < 0.0:
                sx = 0.0
            if sx > in_w - 1.0:
                sx = in_w - 1.0
            x0 = int(np.floor(sx))
            x1 = min(x0 + 1, in_w - 1)
            fx = sx - x0
            for c in range(ch):
                p00 = np.float64(img[y0, x0, c])
                p01 = np.float64(img[y0, x1, c])
                p10 = np.float64(img[y1, x0, c])
                p11 = np.float64(img[y1, x1, c])
                val = (
                    ((1.0 - fy) * (1.0 - fx)) * p00
                    + ((1.0 - fy) * fx) * p01
                    + (fy * (1.0 - fx)) * p10
                    + (fy * fx) * p11
                )
                out[oy, ox, c] = val
    return out


@njit(cache=True)
def rgb_to_hsv_image(rgb):
    h_px, w_px = rgb.shape[0], rgb.shape[1]
    out = np.empty((h_px, w_px, 3), dtype=np.float32)
    for y in range(h_px):
        for x in range(w_px):
            r = np.float64(rgb[y, x, 0])
            g = np.float64(rgb[y, x, 1])
            b = np.float64(rgb[y, x, 2])
            mx = max(r, g, b)
            mn = min(r, g, b)
            delta = mx - mn
            if delta == 0.0:
                h = 0.0
            elif mx == r:
                h = 60.0 * (((g - b) / delta) % 6.0)
            elif mx == g:
                h = 60.0 * ((b - r) / delta + 2.0)
            else:
                h = 60.0 * ((r - g) / delta + 4.0)
            if h >= 360.0:
                h -= 360.0
            s = 0.0 if mx == 0.0 else delta / mx
            v = mx / 255.0
            out[y, x, 0] = h
            out[y, x, 1] = s
            out[y, x, 2] = v
    return out


@njit(cache=True)
def hsv_adjust_to_rgb(hsv, hue_shift, sat_scale, val_scale):
    h_px, w_px = hsv.shape[0], hsv.shape[1]
    out = np.empty((h_px, w_px, 3), dtype=np.uint8)
    for y in range(h_px):
        for x_i in range(w_px):
            h = (np.float64(hsv[y, x_i, 0]) + hue_shift) % 360.0
            s = np.float64(hsv[y, x_i, 1]) * sat_scale
            v = np.float64(hsv[y, x_i, 2]) * val_scale
            if s < 0.0:
                s = 0.0
            elif s > 1.0:
                s = 1.0
            if v < 0.0:
                v = 0.0
            elif v > 1.0:
                v = 1.0
            c = v * s
            hp = h / 60.0
            xv = c * (1.0 - abs(hp % 2.0 - 1.0))
            sextant = min(int(hp), 5)
            if sextant == 0:
                r1, g1, b1 = c, xv, 0.0
            elif sextant == 1:
                r1, g1, b1 = xv, c, 0.0
            elif sextant == 2:
                r1, g1, b1 = 0.0, c, xv
            elif sextant == 3:
                r1, g1, b1 = 0.0, xv, c
            elif sextant == 4:
                r1, g1, b1 = xv, 0.0, c
            else:
                r1, g1, b1 = c, 0.0, xv
            m = v - c
            for ch, val in enumerate(((r1 + m) * 255.0, (g1 + m) * 255.0, (b1 + m) * 255.0)):
                q = np.floor(val + 0.5)
                if q < 0.0:
                    q = 0.0
                elif q > 255.0:
                    q = 255.0
                out[y, x_i, ch] = np.uint8(q)
    return out


@njit(cache=True)
def _reflect_scalar(t, n):
    if n == 1:
        return 0.0
    period = 2.0 * (n - 1)
    t = abs(t) % period
    if t > n - 1:
        t = period - t
    return t


@njit(cache=True)
def affine_warp(img, inv):
    h, w, ch = img.shape
    out = np.empty((h, w, ch), dtype=np.float32)
    for oy in range(h):
        for ox in range(w):
            sx = inv[0, 0] * ox + inv[0, 1] * oy + inv[0, 2]
            sy = inv[1, 0] * ox + inv[1, 1] * oy + inv[1, 2]
            sx = _reflect_scalar(sx, w)
            sy = _reflect_scalar(sy, h)
            x0 = int(np.floor(sx))
            y0 = int(np.floor(sy))
            x1 = min(x0 + 1, w - 1)
            y1 = min(y0 + 1, h - 1)
            fx = sx - x0
            fy = sy - y0
            for c in range(ch):
                p00 = np.float64(img[y0, x0, c])
                p01 = np.float64(img[y0, x1, c])
                p10 = np.float64(img[y1, x0, c])
                p11 = np.float64(img[y1, x1, c])
                val = (
                    ((1.0 - fy) * (1.0 - fx)) * p00
                    + ((1.0 - fy) * fx) * p01
                    + (fy * (1.0 - fx)) * p10
                    + (fy * fx) * p11
                )
                out[oy, ox, c] = val
    return out


@njit(cache=True)
def conv2d(x, weight, bias, stride, pad):
    n, c_in, h, w = x.shape
    o, _, k, _ = weight.shape
    # zero-pad once so the inner loops carry no bounds checks; the extra
    # acc += 0.0 * w terms leave the accumulation bit-identical
    hp, wp = h + 2 * pad, w + 2 * pad
    xp = np.zeros((n, c_in, hp, wp), dtype=np.float32)
    xp[:, :, pad : pad + h, pad : pad + w] = x
    oh = (hp - k) // stride + 1
    ow = (wp - k) // stride + 1
    out = np.empty((n, o, oh, ow), dtype=np.float32)
    for ni in range(n):
        for co in range(o):
            for oy in range(oh):
                iy0 = oy * stride
                for ox in range(ow):
                    ix0 = ox * stride
                    acc = np.float64(bias[co])
                    for ci in range(c_in):
                        for ky in range(k):
                            for kx in range(k):
                                acc += np.float64(xp[ni, ci, iy0 + ky, ix0 + kx]) * np.float64(
                                    weight[co, ci, ky, kx]
                                )
                    out[ni, co, oy, ox] = acc
    return out


@njit(cache=True)
def maxpool2d(x, k, stride):
    n, c, h, w = x.shape
    oh = (h - k) // stride + 1
    ow = (w - k) // stride + 1
    out = np.empty((n, c, oh, ow), dtype=np.float32)
    arg = np.zeros((n, c, oh, ow), dtype=np.int64)
    for ni in range(n):
        for ci in range(c):
            for oy in range(oh):
                for ox in range(ow):
                    best = np.float32(-np.inf)
                    best_at = 0
                    for ky in range(k):
                        iy = oy * stride + ky
                        for kx in range(k):
                            ix = ox * stride + kx
                            val = x[ni, ci, iy, ix]
                            if val > best:
                                best = val
                                best_at = iy * w + ix
                    out[ni, ci, oy, ox] = best
                    arg[ni, ci, oy, ox] = best_at
    return out, arg


@njit(cache=True)
def dense(x, weight, bias):
    n, d = x.shape
    o = weight.shape[0]
    out = np.empty((n, o), dtype=np.float32)
    for ni in range(n):
        for oi in range(o):
            acc = np.float64(bias[oi])
            for di in range(d):
                acc += np.float64(x[ni, di]) * np.float64(weight[oi, di])
            out[ni, oi] = acc
    return out


@njit(cache=True)
def laplacian_variance(gray):
    h, w = gray.shape
    if h < 3 or w < 3:
        return 0.0
    cnt = (h - 2) * (w - 2)
    total = 0.0
    for y in range(1, h - 1):
        for x in range(1, w - 1):
            total += (
                np.float64(gray[y - 1, x])
                + np.float64(gray[y + 1, x])
                + np.float64(gray[y, x - 1])
                + np.float64(gray[y, x + 1])
                - 4.0 * np.float64(gray[y, x])
            )
    mean = total / cnt
    acc = 0.0
    for y in range(1, h - 1):
        for x in range(1, w - 1):
            resp = (
                np.float64(gray[y - 1, x])
                + np.float64(gray[y + 1, x])
                + np.float64(gray[y, x - 1])
                + np.float64(gray[y, x + 1])
                - 4.0 * np.float64(gray[y, x])
            )
            acc += (resp - mean) * (resp - mean)
    return acc / cnt
