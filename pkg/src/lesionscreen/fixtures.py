"""Synthetic stand-ins for the six-class lesion corpus.

corpus_manifest() reproduces the published corpus statistics exactly:
284/75/55/66/161/114 images over 143/62/46/41/144/105 patients
(755 images, 541 patients). materialize_fixture_dataset() additionally
writes desk-scale PNGs plus the patients.tsv sidecar so the ingest path
can be exercised end to end.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import imaging
from .imaging import Raster
from .manifest import ImageRecord, Manifest

CORPUS_SHAPE = {
    "Mpox": (284, 143),
    "Chickenpox": (75, 62),
    "Measles": (55, 46),
    "Cowpox": (66, 41),
    "HFMD": (161, 144),
    "Healthy": (114, 105),
}


def _patient_sizes(images: int, patients: int) -> list[int]:
    base, extra = divmod(images, patients)
    return [base + 1 if i < extra else base for i in range(patients)]


def corpus_records() -> list[ImageRecord]:
    records = []
    for label, (images, patients) in CORPUS_SHAPE.items():
        image_index = 0
        for p, size in enumerate(_patient_sizes(images, patients)):
            for _ in range(size):
                name = f"{label.lower()}_{image_index:04d}"
                records.append(
                    ImageRecord(
                        id=f"{label}__{name}",
                        path=f"{label}/{name}.png",
                        label=label,
                        patient_id=f"{label}-pt{p:03d}",
                        screened=True,
                    )
                )
                image_index += 1
    return records


def corpus_manifest() -> Manifest:
    return Manifest(tuple(corpus_records()))


def synthetic_raster(seed: int, side: int = 64) -> Raster:
    """Skin-toned background with a darker blob and speckle; decodes cleanly
    and carries enough texture to pass the default blur screen."""
    rng = np.random.default_rng(seed)
    base = np.array(
        [rng.integers(180, 240), rng.integers(120, 190), rng.integers(100, 170)],
        dtype=np.float64,
    )
    img = np.tile(base, (side, side, 1))
    yy, xx = np.mgrid[0:side, 0:side]
    cy, cx = rng.integers(side // 4, 3 * side // 4, size=2)
    radius = side * rng.uniform(0.12, 0.25)
    blob = np.exp(-(((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * radius**2)))
    lesion = np.array([150.0, 40.0, 40.0])
    img = img * (1 - blob[..., None] * 0.8) + lesion * blob[..., None] * 0.8
    img += rng.normal(0, 6.0, img.shape)
    return Raster(imaging.quantize_u8(img))


def materialize_fixture_dataset(root: str | Path, side: int = 64) -> Manifest:
    """Write the fixture-shaped corpus as real PNGs under root."""
    root = Path(root)
    records = corpus_records()
    sidecar_lines = []
    for i, rec in enumerate(records):
        path = root / rec.path
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(imaging.encode_png(synthetic_raster(seed=i, side=side)))
        sidecar_lines.append(f"{rec.path}\t{rec.patient_id}")
    (root / "patients.tsv").write_text("\n".join(sidecar_lines) + "\n", encoding="utf-8")
    return Manifest(tuple(records))
