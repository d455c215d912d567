#!/usr/bin/env python3
"""Compare the numba kernels against the pure-numpy fallback.

Runs every hot kernel on representative shapes and prints per-call times
plus the speedup. The numba path is warmed before timing so JIT compile
cost is excluded.

    python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from lesionscreen.kernels import numba_backend as nb
from lesionscreen.kernels import numpy_backend as npk


def timeit(fn, repeats):
    fn()  # warm (JIT compile / cache fill)
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) / repeats


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    image = rng.uniform(0, 255, (480, 640, 3)).astype(np.float32)
    hsv = npk.rgb_to_hsv_image(image)
    warp = np.array([[0.96, 0.12, -20.0], [-0.12, 0.96, 15.0]])
    x = rng.normal(0, 1, (1, 8, 64, 64)).astype(np.float32)
    w = rng.normal(0, 1, (16, 8, 3, 3)).astype(np.float32)
    b = rng.normal(0, 1, 16).astype(np.float32)
    flat = rng.normal(0, 1, (1, 768)).astype(np.float32)
    dense_w = rng.normal(0, 1, (4096, 768)).astype(np.float32)
    dense_b = rng.normal(0, 1, 4096).astype(np.float32)
    gray = rng.uniform(0, 255, (480, 640)).astype(np.float32)

    cases = [
        ("bilinear_resize 640x480 -> 224", lambda k: k.bilinear_resize(image, 224, 224)),
        ("rgb_to_hsv 640x480", lambda k: k.rgb_to_hsv_image(image)),
        ("hsv_adjust 640x480", lambda k: k.hsv_adjust_to_rgb(hsv, 18.0, 1.3, 0.8)),
        ("affine_warp 640x480", lambda k: k.affine_warp(image, warp)),
        ("conv2d 8->16ch 64px k3", lambda k: k.conv2d(x, w, b, 1, 1)),
        ("maxpool2d 8ch 64px k2", lambda k: k.maxpool2d(x, 2, 2)),
        ("dense 768 -> 4096", lambda k: k.dense(flat, dense_w, dense_b)),
        ("laplacian_variance 640x480", lambda k: k.laplacian_variance(gray)),
    ]

    print(f"{'kernel':<32} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for name, call in cases:
        t_np = timeit(lambda: call(npk), args.repeats)
        t_nb = timeit(lambda: call(nb), args.repeats)
        print(f"{name:<32} {t_np*1000:>8.2f}ms {t_nb*1000:>8.2f}ms {t_np/t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
