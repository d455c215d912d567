"""Pixel-level primitives: decode/encode, RGB<->HSV, crop/resize, overlays.

Conventions (all fixed so results are bit-reproducible across machines):

  - Hue is degrees in [0, 360); saturation and value in [0, 1].
    Achromatic pixels (max == min) get hue 0. For max > 0,
    s = (max - min) / max and v = max / 255.
  - Resampling is bilinear with half-pixel-center coordinates:
        src = (dst + 0.5) * (in_size / out_size) - 0.5
    clamped to [0, in_size - 1], interpolating the four neighbours with
    weights (1-fy)(1-fx), (1-fy)fx, fy(1-fx), fy*fx in float64.
  - Channel rounding back to 8 bits is round-half-up: floor(x + 0.5),
    clipped to [0, 255].
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from . import kernels
from .errors import MalformedImage, UnsupportedFormat

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_JPEG_MAGIC = b"\xff\xd8"

# Rec. 601 luma weights, used for grayscale reduction everywhere.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class Raster:
    """Decoded 8-bit RGB image; pixels is an (h, w, 3) uint8 array."""

    pixels: np.ndarray

    def __post_init__(self):
        p = self.pixels
        if p.ndim != 3 or p.shape[2] != 3 or p.dtype != np.uint8:
            raise ValueError("Raster requires an (h, w, 3) uint8 array")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError("Raster dimensions must be >= 1")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class HsvPixel:
    """Hue in degrees [0, 360), saturation and value in [0, 1].

    Construction wraps hue modulo 360, clamps s and v, and canonicalizes
    hue to 0 when s == 0.
    """

    h: float
    s: float
    v: float

    def __post_init__(self):
        s = min(max(self.s, 0.0), 1.0)
        v = min(max(self.v, 0.0), 1.0)
        h = self.h % 360.0
        if h >= 360.0:  # float modulo can round up to the period itself
            h -= 360.0
        if s == 0.0:
            h = 0.0
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "v", v)


def decode_image(data: bytes) -> Raster:
    """Decode a PNG or JPEG byte stream. 16-bit sources truncate to 8-bit."""
    if data[:8] == _PNG_MAGIC:
        fmt = "PNG"
    elif data[:2] == _JPEG_MAGIC:
        fmt = "JPEG"
    else:
        raise UnsupportedFormat("stream is neither PNG nor JPEG")
    try:
        img = Image.open(io.BytesIO(data), formats=[fmt])
        img.load()
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise MalformedImage(f"undecodable {fmt} stream: {exc}") from None
    if img.mode in ("I", "I;16", "I;16B", "I;16L", "I;16N"):
        arr = np.asarray(img, dtype=np.uint32)
        arr = (arr >> 8).clip(0, 255).astype(np.uint8)
        rgb = np.stack([arr, arr, arr], axis=-1)
    else:
        rgb = np.asarray(img.convert("RGB"), dtype=np.uint8)
    if rgb.shape[0] < 1 or rgb.shape[1] < 1:
        raise MalformedImage("decoded image has a zero dimension")
    return Raster(rgb)


def encode_png(raster: Raster) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(raster.pixels, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def rgb_to_hsv(rgb: tuple[int, int, int]) -> HsvPixel:
    """Hexcone conversion of one (r, g, b) triple with channels in [0, 255]."""
    r, g, b = (float(c) for c in rgb)
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
    return HsvPixel(h, s, mx / 255.0)


def hsv_to_rgb(p: HsvPixel) -> tuple[int, int, int]:
    """Inverse hexcone conversion, round-half-up per channel."""
    c = p.v * p.s
    hp = p.h / 60.0
    x = c * (1.0 - abs(hp % 2.0 - 1.0))
    sextant = min(int(hp), 5)
    r1, g1, b1 = (
        (c, x, 0.0),
        (x, c, 0.0),
        (0.0, c, x),
        (0.0, x, c),
        (x, 0.0, c),
        (c, 0.0, x),
    )[sextant]
    m = p.v - c
    return tuple(
        int(min(max(math.floor(ch * 255.0 + 0.5), 0), 255)) for ch in (r1 + m, g1 + m, b1 + m)
    )


def crop_resize(raster: Raster, side: int) -> Raster:
    """Center-crop to the largest square, then bilinear-resize to side x side.

    Identity (bit-exact) when the input is already square with the target
    side, since src == dst under the half-pixel-center mapping at scale 1.
    """
    if side < 1:
        raise ValueError("side must be >= 1")
    h, w = raster.height, raster.width
    square = min(h, w)
    y0 = (h - square) // 2
    x0 = (w - square) // 2
    cropped = raster.pixels[y0 : y0 + square, x0 : x0 + square]
    if square == side:
        return Raster(np.ascontiguousarray(cropped))
    resized = kernels.bilinear_resize(
        np.ascontiguousarray(cropped, dtype=np.float32), side, side
    )
    return Raster(quantize_u8(resized))


def resize_bilinear(raster: Raster, out_w: int, out_h: int) -> Raster:
    """Plain bilinear resize to an arbitrary (possibly non-square) size."""
    resized = kernels.bilinear_resize(
        np.ascontiguousarray(raster.pixels, dtype=np.float32), out_h, out_w
    )
    return Raster(quantize_u8(resized))


def quantize_u8(values: np.ndarray) -> np.ndarray:
    """Round-half-up float channels into uint8."""
    return np.clip(np.floor(values.astype(np.float64) + 0.5), 0, 255).astype(np.uint8)


def luma(raster: Raster) -> np.ndarray:
    """Rec. 601 grayscale plane as float32 in [0, 255]."""
    p = raster.pixels.astype(np.float32)
    wr, wg, wb = LUMA_WEIGHTS
    return wr * p[..., 0] + wg * p[..., 1] + wb * p[..., 2]


def heatmap_gray_png(map01: np.ndarray) -> bytes:
    """Render a [0, 1] float heatmap as an 8-bit grayscale PNG."""
    gray = quantize_u8(map01 * 255.0)
    buf = io.BytesIO()
    Image.fromarray(gray, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def heatmap_overlay_png(base: Raster, map01: np.ndarray) -> bytes:
    """Blend pure red over the base image, alpha = 0.6 * heatmap value."""
    if map01.shape != (base.height, base.width):
        raise ValueError("heatmap shape must match the base raster")
    alpha = (0.6 * map01.astype(np.float64))[..., None]
    red = np.array([255.0, 0.0, 0.0])
    blended = base.pixels.astype(np.float64) * (1.0 - alpha) + red * alpha
    buf = io.BytesIO()
    Image.fromarray(quantize_u8(blended), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()
