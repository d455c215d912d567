"""Hot-loop kernels with a numba backend and a pure-numpy fallback.

Set LESIONSCREEN_NO_NUMBA=1 to force the numpy path (the fallback is also
taken automatically when numba is not importable). Both backends implement
the same formulas; see benchmarks/bench_kernels.py for a speed comparison.
"""

import os

_FORCE_NUMPY = os.environ.get("LESIONSCREEN_NO_NUMBA", "").strip().lower() in {
    "1",
    "true",
    "yes",
    "on",
}

if _FORCE_NUMPY:
    from . import numpy_backend as _impl

    BACKEND = "numpy"
else:
    try:
        from . import numba_backend as _impl

        BACKEND = "numba"
    except ImportError:
        from . import numpy_backend as _impl

        BACKEND = "numpy"

bilinear_resize = _impl.bilinear_resize
rgb_to_hsv_image = _impl.rgb_to_hsv_image
hsv_adjust_to_rgb = _impl.hsv_adjust_to_rgb
affine_warp = _impl.affine_warp
conv2d = _impl.conv2d
maxpool2d = _impl.maxpool2d
dense = _impl.dense
laplacian_variance = _impl.laplacian_variance

__all__ = [
    "BACKEND",
    "bilinear_resize",
    "rgb_to_hsv_image",
    "hsv_adjust_to_rgb",
    "affine_warp",
    "conv2d",
    "maxpool2d",
    "dense",
    "laplacian_variance",
]
