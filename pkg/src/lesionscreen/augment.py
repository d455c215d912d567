"""Training-corpus expansion: HSV color-space grid and standard augmentations.

The color-space pass walks hue shifts (outer), saturation scales, then
value scales (inner), emitting |H| * |S| * |V| variants per image; the
default grid is 20 x 3 x 3 = 180 and tiles the full hue circle. Scaled
saturation/value clamp to [0, 1].

The standard pass emits the original plus (multiplier - 1) variants, each
applying a seeded subset of 1-3 ops. Geometric ops resample bilinearly
with reflect padding; reflection is an exact flip.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import imaging, kernels
from .dataset import load_raster
from .errors import InvalidGrid, InvalidSpec, IoFailure
from .folds import FoldPlan
from .imaging import Raster
from .manifest import ImageRecord, Manifest

AUGCFG_VERSION = "augcfg/1"

STANDARD_OPS = (
    "rotation",
    "translation",
    "reflection",
    "shear",
    "hue_jitter",
    "saturation_jitter",
    "contrast_jitter",
    "brightness_jitter",
    "noise",
    "scaling",
)


@dataclass(frozen=True)
class AugmentationGrid:
    hue_shifts: tuple[float, ...]
    saturation_scales: tuple[float, ...]
    value_scales: tuple[float, ...]

    def __post_init__(self):
        if not (self.hue_shifts and self.saturation_scales and self.value_scales):
            raise InvalidGrid("all three parameter lists must be non-empty")
        if any(s <= 0 for s in self.saturation_scales) or any(
            v <= 0 for v in self.value_scales
        ):
            raise InvalidGrid("saturation and value scales must be > 0")

    @property
    def variant_count(self) -> int:
        return len(self.hue_shifts) * len(self.saturation_scales) * len(self.value_scales)


@dataclass(frozen=True)
class StandardAugmentSpec:
    ops: tuple[str, ...] = STANDARD_OPS
    seed: int = 0
    multiplier: int = 14
    rotation_degrees: tuple[float, float] = (-30.0, 30.0)
    translation_fraction: tuple[float, float] = (-0.10, 0.10)
    shear_degrees: tuple[float, float] = (-15.0, 15.0)
    scale_range: tuple[float, float] = (0.85, 1.15)
    hue_jitter_degrees: tuple[float, float] = (-72.0, 72.0)
    saturation_jitter: tuple[float, float] = (0.8, 1.2)
    contrast_jitter: tuple[float, float] = (0.8, 1.2)
    brightness_jitter: tuple[float, float] = (0.8, 1.2)
    noise_sigma_max: float = 8.0 / 255.0

    def __post_init__(self):
        if self.multiplier < 1:
            raise InvalidSpec("multiplier must be >= 1")
        if not self.ops:
            raise InvalidSpec("ops must be non-empty")
        for op in self.ops:
            if op not in STANDARD_OPS:
                raise InvalidSpec(f"unknown op {op!r}")
        for lo, hi in (
            self.rotation_degrees,
            self.translation_fraction,
            self.shear_degrees,
            self.scale_range,
            self.hue_jitter_degrees,
            self.saturation_jitter,
            self.contrast_jitter,
            self.brightness_jitter,
        ):
            if lo > hi:
                raise InvalidSpec("parameter range must satisfy lo <= hi")
        if not 0.0 < self.noise_sigma_max <= 1.0:
            raise InvalidSpec("noise sigma must be in (0, 1]")


def default_grid() -> AugmentationGrid:
    """20 hue shifts tiling [0, 360) x 3 saturation x 3 value scales = 180."""
    return AugmentationGrid(
        hue_shifts=tuple(float(j) for j in range(0, 360, 18)),
        saturation_scales=(0.7, 1.0, 1.3),
        value_scales=(0.8, 1.0, 1.2),
    )


def color_space_augment(x: Raster, grid: AugmentationGrid) -> list[Raster]:
    """All hue/saturation/value combinations, hue outermost, value innermost."""
    hsv = kernels.rgb_to_hsv_image(np.ascontiguousarray(x.pixels, dtype=np.float32))
    out = []
    for hue_shift in grid.hue_shifts:
        for sat_scale in grid.saturation_scales:
            for val_scale in grid.value_scales:
                rgb = kernels.hsv_adjust_to_rgb(
                    hsv, float(hue_shift), float(sat_scale), float(val_scale)
                )
                out.append(Raster(rgb))
    return out


def _center_inverse(matrix: np.ndarray, cx: float, cy: float) -> np.ndarray:
    """Turn a 2x2 inverse linear map about the image center into a 2x3 map."""
    inv = np.empty((2, 3), dtype=np.float64)
    inv[:, :2] = matrix
    inv[0, 2] = cx - matrix[0, 0] * cx - matrix[0, 1] * cy
    inv[1, 2] = cy - matrix[1, 0] * cx - matrix[1, 1] * cy
    return inv


def _apply_geometric(pixels: np.ndarray, inv: np.ndarray) -> np.ndarray:
    warped = kernels.affine_warp(np.ascontiguousarray(pixels, dtype=np.float32), inv)
    return imaging.quantize_u8(warped)


def _apply_op(op: str, raster: Raster, spec: StandardAugmentSpec, rng) -> Raster:
    h, w = raster.height, raster.width
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    p = raster.pixels

    if op == "rotation":
        theta = math.radians(rng.uniform(*spec.rotation_degrees))
        cos_t, sin_t = math.cos(-theta), math.sin(-theta)
        inv = _center_inverse(np.array([[cos_t, -sin_t], [sin_t, cos_t]]), cx, cy)
        return Raster(_apply_geometric(p, inv))
    if op == "translation":
        dx = rng.uniform(*spec.translation_fraction) * w
        dy = rng.uniform(*spec.translation_fraction) * h
        inv = np.array([[1.0, 0.0, -dx], [0.0, 1.0, -dy]])
        return Raster(_apply_geometric(p, inv))
    if op == "reflection":
        axis = int(rng.integers(0, 2))
        flipped = p[:, ::-1] if axis == 0 else p[::-1, :]
        return Raster(np.ascontiguousarray(flipped))
    if op == "shear":
        k = math.tan(math.radians(rng.uniform(*spec.shear_degrees)))
        inv = _center_inverse(np.array([[1.0, -k], [0.0, 1.0]]), cx, cy)
        return Raster(_apply_geometric(p, inv))
    if op == "scaling":
        s = rng.uniform(*spec.scale_range)
        inv = _center_inverse(np.array([[1.0 / s, 0.0], [0.0, 1.0 / s]]), cx, cy)
        return Raster(_apply_geometric(p, inv))
    if op in ("hue_jitter", "saturation_jitter", "brightness_jitter"):
        dh, ks, kv = 0.0, 1.0, 1.0
        if op == "hue_jitter":
            dh = rng.uniform(*spec.hue_jitter_degrees)
        elif op == "saturation_jitter":
            ks = rng.uniform(*spec.saturation_jitter)
        else:
            kv = rng.uniform(*spec.brightness_jitter)
        hsv = kernels.rgb_to_hsv_image(np.ascontiguousarray(p, dtype=np.float32))
        return Raster(kernels.hsv_adjust_to_rgb(hsv, dh, ks, kv))
    if op == "contrast_jitter":
        c = rng.uniform(*spec.contrast_jitter)
        adjusted = (p.astype(np.float64) - 127.5) * c + 127.5
        return Raster(imaging.quantize_u8(adjusted))
    if op == "noise":
        sigma = rng.uniform(0.0, spec.noise_sigma_max) * 255.0
        noisy = p.astype(np.float64) + rng.normal(0.0, 1.0, p.shape) * sigma
        return Raster(imaging.quantize_u8(noisy))
    raise InvalidSpec(f"unknown op {op!r}")


def standard_augment(
    x: Raster, spec: StandardAugmentSpec, stream_key: int = 0
) -> list[Raster]:
    """The original plus (multiplier - 1) seeded variants.

    stream_key decorrelates variants across images in a corpus run while
    keeping the whole expansion a pure function of (x, spec, stream_key).
    """
    out = [x]
    for variant in range(1, spec.multiplier):
        rng = np.random.default_rng([spec.seed, stream_key, variant])
        max_ops = min(3, len(spec.ops))
        n_ops = int(rng.integers(1, max_ops + 1))
        chosen = sorted(rng.choice(len(spec.ops), size=n_ops, replace=False).tolist())
        raster = x
        for idx in chosen:
            raster = _apply_op(spec.ops[idx], raster, spec, rng)
        out.append(raster)
    return out


def _record_stream_key(record_id: str) -> int:
    digest = hashlib.sha256(record_id.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def _augcfg_dump(spec: StandardAugmentSpec | None, grid: AugmentationGrid | None) -> str:
    lines = [AUGCFG_VERSION]
    if grid is not None:
        lines.append("grid.hue_shifts=" + ",".join(repr(v) for v in grid.hue_shifts))
        lines.append(
            "grid.saturation_scales=" + ",".join(repr(v) for v in grid.saturation_scales)
        )
        lines.append("grid.value_scales=" + ",".join(repr(v) for v in grid.value_scales))
    if spec is not None:
        lines.append("spec.ops=" + ",".join(spec.ops))
        lines.append(f"spec.seed={spec.seed}")
        lines.append(f"spec.multiplier={spec.multiplier}")
        for name in (
            "rotation_degrees",
            "translation_fraction",
            "shear_degrees",
            "scale_range",
            "hue_jitter_degrees",
            "saturation_jitter",
            "contrast_jitter",
            "brightness_jitter",
        ):
            lo, hi = getattr(spec, name)
            lines.append(f"spec.{name}={lo!r},{hi!r}")
        lines.append(f"spec.noise_sigma_max={spec.noise_sigma_max!r}")
    return "\n".join(lines) + "\n"


def augment_corpus(
    m: Manifest,
    plan: FoldPlan,
    fold_index: int,
    root: str | Path,
    out_dir: str | Path,
    spec: StandardAugmentSpec | None = None,
    grid: AugmentationGrid | None = None,
) -> Manifest:
    """Expand one fold's train and val images onto disk.

    Test-partition records pass through untouched; train/val records are
    replaced by their expansion (standard pass keeps the original record,
    the color-space pass emits exactly the grid's variants). Returns the
    extended manifest; augmented files land under out_dir as PNG.
    """
    if spec is None and grid is None:
        raise InvalidSpec("need a standard spec, a grid, or both")
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "augcfg.txt").write_text(_augcfg_dump(spec, grid), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(str(exc)) from None
    fold = plan.folds[fold_index]

    def emit(parent: ImageRecord, child_id: str, raster: Raster) -> ImageRecord:
        filename = f"{child_id}.png"
        try:
            (out_dir / filename).write_bytes(imaging.encode_png(raster))
        except OSError as exc:
            raise IoFailure(str(exc)) from None
        return replace(
            parent, id=child_id, path=filename, source_url=None, crop=None, verified_by=None
        )

    records: list[ImageRecord] = []
    for rec in m.records:
        part = fold.partition_of(rec.patient_id)
        if part not in ("train", "val"):
            records.append(rec)
            continue
        raster = load_raster(rec, root)
        # (lineage id, source record, pixels, already materialised on disk)
        staged: list[tuple[str, ImageRecord, Raster, bool]] = [(rec.id, rec, raster, True)]
        if spec is not None:
            variants = standard_augment(raster, spec, _record_stream_key(rec.id))
            for k, variant in enumerate(variants[1:], start=1):
                staged.append((f"{rec.id}__std{k}", rec, variant, False))
        if grid is not None:
            for lineage, parent, image, _ in staged:
                cs = color_space_augment(image, grid)
                i = 0
                for hi in range(len(grid.hue_shifts)):
                    for si in range(len(grid.saturation_scales)):
                        for vi in range(len(grid.value_scales)):
                            records.append(
                                emit(parent, f"{lineage}__cs{hi}_{si}_{vi}", cs[i])
                            )
                            i += 1
        else:
            for lineage, parent, image, on_disk in staged:
                if on_disk:
                    records.append(parent)
                else:
                    records.append(emit(parent, lineage, image))
    return Manifest(tuple(records))
