"""Skin-lesion screening pipeline: curation, augmentation, inference, serving."""

from .imaging import HsvPixel, Raster, crop_resize, decode_image, hsv_to_rgb, rgb_to_hsv
from .manifest import CLASS_LABELS, ImageRecord, Manifest
from .model import ModelGraph, export_reference_model, load_model, serialize_model

__version__ = "0.1.0"

__all__ = [
    "CLASS_LABELS",
    "HsvPixel",
    "ImageRecord",
    "Manifest",
    "ModelGraph",
    "Raster",
    "crop_resize",
    "decode_image",
    "export_reference_model",
    "hsv_to_rgb",
    "load_model",
    "rgb_to_hsv",
    "serialize_model",
    "__version__",
]
