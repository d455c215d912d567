"""Corpus operations: ingest a directory tree, quality-screen, deduplicate.

Patient identity comes from an optional sidecar file ``patients.tsv`` at
the dataset root (lines of ``relative/path<TAB>patient_id``). Without it
every file becomes its own synthetic patient, which is the conservative
choice for split constraints.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import imaging, kernels
from .errors import EmptyDataset, LesionScreenError, UnknownLabelFolder
from .imaging import Raster
from .manifest import ImageRecord, Manifest

_IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}
_SIDECAR_NAME = "patients.tsv"


@dataclass(frozen=True)
class QualityThresholds:
    blur_threshold: float = 100.0
    min_side_threshold: int = 64


@dataclass(frozen=True)
class QualityReport:
    blur_score: float
    min_side: int
    passed: bool


def quality_screen(raster: Raster, cfg: QualityThresholds = QualityThresholds()) -> QualityReport:
    """Score focus as the variance of the 3x3 Laplacian over the luma plane."""
    blur = kernels.laplacian_variance(imaging.luma(raster))
    min_side = min(raster.width, raster.height)
    passed = blur >= cfg.blur_threshold and min_side >= cfg.min_side_threshold
    return QualityReport(blur_score=float(blur), min_side=min_side, passed=passed)


def _sanitize_id(rel_path: Path) -> str:
    stem = rel_path.with_suffix("").as_posix().replace("/", "__")
    return re.sub(r"[^A-Za-z0-9_.-]", "_", stem)


def _read_sidecar(root: Path) -> dict[str, str]:
    sidecar = root / _SIDECAR_NAME
    if not sidecar.is_file():
        return {}
    mapping = {}
    for line in sidecar.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        rel, _, pid = line.partition("\t")
        if not pid:
            raise LesionScreenError(f"{_SIDECAR_NAME}: bad line {line!r}")
        mapping[rel] = pid
    return mapping


def ingest(root: str | Path, labeling: dict[str, str]) -> Manifest:
    """Build a manifest from one subfolder per class of image files.

    Undecodable files are skipped; an empty result raises EmptyDataset.
    """
    root = Path(root)
    patients = _read_sidecar(root)
    records: list[ImageRecord] = []
    used_ids: set[str] = set()
    folders = sorted(p for p in root.iterdir() if p.is_dir())
    for folder in folders:
        if folder.name not in labeling:
            raise UnknownLabelFolder(f"folder {folder.name!r} has no label mapping")
        label = labeling[folder.name]
        for file in sorted(folder.iterdir()):
            if file.suffix.lower() not in _IMAGE_SUFFIXES:
                continue
            try:
                imaging.decode_image(file.read_bytes())
            except LesionScreenError:
                continue
            rel = file.relative_to(root)
            rid = _sanitize_id(rel)
            serial = 2
            while rid in used_ids:
                rid = f"{_sanitize_id(rel)}-{serial}"
                serial += 1
            used_ids.add(rid)
            patient = patients.get(rel.as_posix(), f"pt-{rid}")
            records.append(
                ImageRecord(id=rid, path=rel.as_posix(), label=label, patient_id=patient)
            )
    if not records:
        raise EmptyDataset(f"no decodable images under {root}")
    return Manifest(tuple(records))


def load_raster(record: ImageRecord, root: str | Path) -> Raster:
    """Decode a record's file, honoring its curated crop rectangle if set."""
    raster = imaging.decode_image((Path(root) / record.path).read_bytes())
    if record.crop is not None:
        x, y, w, h = record.crop
        if w < 1 or h < 1 or x < 0 or y < 0 or x + w > raster.width or y + h > raster.height:
            raise LesionScreenError(f"record {record.id}: crop {record.crop} out of bounds")
        raster = Raster(np.ascontiguousarray(raster.pixels[y : y + h, x : x + w]))
    return raster


def dhash64(raster: Raster) -> int:
    """64-bit difference hash: 9x8 luma downsample, horizontal gradients."""
    gray = imaging.luma(raster)[..., None]
    small = kernels.bilinear_resize(np.ascontiguousarray(gray), 8, 9)[..., 0]
    value = 0
    for row in range(8):
        for col in range(8):
            if small[row, col] > small[row, col + 1]:
                value |= 1 << (row * 8 + col)
    return value


def hamming(a: int, b: int) -> int:
    return (a ^ b).bit_count()


def find_duplicates(
    manifest: Manifest, root: str | Path, threshold: int = 4
) -> list[list[str]]:
    """Group record ids whose dHash Hamming distance is within threshold.

    Returns groups of size >= 2, each sorted by id, ordered by first id.
    """
    ids = [rec.id for rec in manifest.records]
    hashes = [dhash64(load_raster(rec, root)) for rec in manifest.records]
    parent = list(range(len(ids)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            if hamming(hashes[i], hashes[j]) <= threshold:
                parent[find(i)] = find(j)

    groups: dict[int, list[str]] = {}
    for i, rid in enumerate(ids):
        groups.setdefault(find(i), []).append(rid)
    result = [sorted(g) for g in groups.values() if len(g) >= 2]
    result.sort(key=lambda g: g[0])
    return result


def screen_manifest(
    manifest: Manifest, root: str | Path, cfg: QualityThresholds = QualityThresholds()
) -> tuple[Manifest, dict[str, QualityReport]]:
    """Run the quality screen on every record; flip screened flags accordingly."""
    reports = {}
    passed = set()
    for rec in manifest.records:
        report = quality_screen(load_raster(rec, root), cfg)
        reports[rec.id] = report
        if report.passed:
            passed.add(rec.id)
    from .manifest import mark_screened

    return mark_screened(manifest, passed), reports
