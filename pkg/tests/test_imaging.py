import io
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from lesionscreen.errors import MalformedImage, UnsupportedFormat
from lesionscreen.imaging import (
    HsvPixel,
    Raster,
    crop_resize,
    decode_image,
    encode_png,
    heatmap_gray_png,
    heatmap_overlay_png,
    hsv_to_rgb,
    quantize_u8,
    resize_bilinear,
    rgb_to_hsv,
)

from .conftest import make_raster

channels = st.integers(min_value=0, max_value=255)


def pil_png(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


def pil_jpeg(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="JPEG")
    return buf.getvalue()


def png_header_dims(data: bytes) -> tuple[int, int]:
    """Independent dimension oracle: parse the IHDR chunk by hand."""
    assert data[:8] == b"\x89PNG\r\n\x1a\n"
    assert data[12:16] == b"IHDR"
    width, height = struct.unpack(">II", data[16:24])
    return width, height


def jpeg_header_dims(data: bytes) -> tuple[int, int]:
    """Independent dimension oracle: scan for the first SOF marker."""
    pos = 2
    while pos < len(data):
        assert data[pos] == 0xFF
        marker = data[pos + 1]
        length = struct.unpack(">H", data[pos + 2 : pos + 4])[0]
        if 0xC0 <= marker <= 0xCF and marker not in (0xC4, 0xC8, 0xCC):
            height, width = struct.unpack(">HH", data[pos + 5 : pos + 9])
            return width, height
        pos += 2 + length
    raise AssertionError("no SOF marker found")


class TestDecode:
    def test_one_pixel_white_png(self):
        raster = decode_image(pil_png(np.full((1, 1, 3), 255, dtype=np.uint8)))
        assert (raster.width, raster.height) == (1, 1)
        assert tuple(raster.pixels[0, 0]) == (255, 255, 255)

    def test_truncated_jpeg_is_malformed(self):
        data = pil_jpeg(make_raster(0, 32, 32).pixels)
        with pytest.raises(MalformedImage):
            decode_image(data[: len(data) // 2])

    def test_unknown_magic_is_unsupported(self):
        with pytest.raises(UnsupportedFormat):
            decode_image(b"GIF89a" + b"\x00" * 64)

    def test_garbage_png_body_is_malformed(self):
        with pytest.raises(MalformedImage):
            decode_image(b"\x89PNG\r\n\x1a\n" + b"\x00" * 32)

    @pytest.mark.parametrize("seed,h,w", [(1, 37, 61), (2, 128, 64), (3, 7, 251)])
    def test_dims_match_independent_header_parse(self, seed, h, w):
        arr = make_raster(seed, h, w).pixels
        png = pil_png(arr)
        raster = decode_image(png)
        assert (raster.width, raster.height) == png_header_dims(png)
        jpg = pil_jpeg(arr)
        raster = decode_image(jpg)
        assert (raster.width, raster.height) == jpeg_header_dims(jpg)

    def test_sixteen_bit_png_truncates_high_byte(self):
        gray16 = np.array([[0x1234, 0xFFFF], [0x0000, 0xAB00]], dtype=np.uint16)
        buf = io.BytesIO()
        Image.fromarray(gray16).save(buf, format="PNG")
        raster = decode_image(buf.getvalue())
        assert raster.pixels[..., 0].tolist() == [[0x12, 0xFF], [0x00, 0xAB]]

    def test_png_roundtrip_through_encode(self):
        raster = make_raster(4, 21, 9)
        again = decode_image(encode_png(raster))
        assert np.array_equal(again.pixels, raster.pixels)


class TestRgbHsv:
    def test_pure_red_axis(self):
        assert rgb_to_hsv((255, 0, 0)) == HsvPixel(0.0, 1.0, 1.0)

    def test_achromatic_gray(self):
        p = rgb_to_hsv((128, 128, 128))
        assert (p.h, p.s) == (0.0, 0.0)
        assert p.v == pytest.approx(128 / 255)

    def test_hand_evaluated_hexcone_case(self):
        # max=200 (green), min=10: h = 60 * ((77 - 10) / 190 + 2), s = 190/200
        p = rgb_to_hsv((10, 200, 77))
        assert p.h == pytest.approx(141.15789473684211, abs=1e-12)
        assert p.s == pytest.approx(0.95, abs=1e-12)
        assert p.v == pytest.approx(200 / 255, abs=1e-12)

    def test_inverse_red_axis(self):
        assert hsv_to_rgb(HsvPixel(0.0, 1.0, 1.0)) == (255, 0, 0)

    def test_inverse_half_gray_rounds_half_up(self):
        # 0.5 * 255 = 127.5 -> round-half-up -> 128
        assert hsv_to_rgb(HsvPixel(0.0, 0.0, 0.5)) == (128, 128, 128)

    @given(channels, channels, channels)
    @settings(max_examples=300)
    def test_roundtrip_within_one(self, r, g, b):
        back = hsv_to_rgb(rgb_to_hsv((r, g, b)))
        assert all(abs(x - y) <= 1 for x, y in zip(back, (r, g, b)))

    def test_roundtrip_dense_lattice(self):
        for r in range(0, 256, 15):
            for g in range(0, 256, 15):
                for b in range(0, 256, 15):
                    back = hsv_to_rgb(rgb_to_hsv((r, g, b)))
                    assert all(abs(x - y) <= 1 for x, y in zip(back, (r, g, b)))

    @given(channels, channels, channels)
    @settings(max_examples=300)
    def test_cyclic_permutation_shifts_hue_120(self, r, g, b):
        base = rgb_to_hsv((r, g, b))
        if base.s == 0.0:
            return
        rotated = rgb_to_hsv((b, r, g))  # value of r moves into the g slot
        assert rotated.h == pytest.approx((base.h + 120.0) % 360.0, abs=1e-9)

    def test_hue_wraps_and_sv_clamp(self):
        p = HsvPixel(725.0, 1.5, -0.25)
        assert (p.h, p.s, p.v) == (5.0, 1.0, 0.0)

    def test_achromatic_hue_canonicalized(self):
        assert HsvPixel(200.0, 0.0, 0.5).h == 0.0


class TestCropResize:
    def test_uniform_gray_is_resize_invariant(self):
        gray = Raster(np.full((448, 448, 3), 77, dtype=np.uint8))
        out = crop_resize(gray, 224)
        assert out.pixels.shape == (224, 224, 3)
        assert (out.pixels == 77).all()

    def test_center_crop_geometry_640x480(self):
        raster = make_raster(5, 480, 640)
        out = crop_resize(raster, 480)  # crop only, no resample
        assert np.array_equal(out.pixels, raster.pixels[:, 80:560])

    def test_identity_on_matching_square(self):
        raster = make_raster(6, 224, 224)
        assert np.array_equal(crop_resize(raster, 224).pixels, raster.pixels)

    def test_idempotent_once_sized(self):
        raster = make_raster(7, 300, 170)
        once = crop_resize(raster, 96)
        twice = crop_resize(once, 96)
        assert np.array_equal(once.pixels, twice.pixels)

    @pytest.mark.parametrize("h,w,side", [(10, 20, 7), (500, 30, 64), (3, 3, 9)])
    def test_output_dimensions(self, h, w, side):
        out = crop_resize(make_raster(8, h, w), side)
        assert out.pixels.shape == (side, side, 3)

    def test_rejects_degenerate_side(self):
        with pytest.raises(ValueError):
            crop_resize(make_raster(9, 4, 4), 0)

    def test_non_square_resize(self):
        out = resize_bilinear(make_raster(10, 31, 17), out_w=9, out_h=8)
        assert out.pixels.shape == (8, 9, 3)

    def test_quantize_rounds_half_up(self):
        vals = np.array([[126.5, 127.49, -3.0], [255.5, 0.5, 254.5]], dtype=np.float64)
        assert quantize_u8(vals).tolist() == [[127, 127, 0], [255, 1, 255]]


class TestHeatmapExport:
    def test_gray_png_roundtrip(self):
        map01 = np.linspace(0, 1, 64, dtype=np.float32).reshape(8, 8)
        raster = decode_image(heatmap_gray_png(map01))
        assert (raster.width, raster.height) == (8, 8)
        assert raster.pixels[0, 0, 0] == 0 and raster.pixels[-1, -1, 0] == 255

    def test_overlay_blends_red_only_where_hot(self):
        base = Raster(np.full((4, 4, 3), 100, dtype=np.uint8))
        map01 = np.zeros((4, 4), dtype=np.float32)
        map01[0, 0] = 1.0
        out = decode_image(heatmap_overlay_png(base, map01))
        assert tuple(out.pixels[1, 1]) == (100, 100, 100)
        r, g, b = out.pixels[0, 0]
        assert r > 100 and g < 100 and b < 100

    def test_overlay_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            heatmap_overlay_png(make_raster(11, 4, 4), np.zeros((5, 5)))
