"""Dataset catalog: image records and the line-delimited manifest format.

File format ("mslmanifest/1"): UTF-8 text, first line is the format
version, then one tab-separated record per line with fields in the order

    id  path  label  patient_id  source_url  crop  screened  verified_by

Optional fields serialize as the empty string, crop as "x,y,w,h",
screened as "1"/"0". Load followed by save is byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ManifestFormatError, UnknownLabel

FORMAT_VERSION = "mslmanifest/1"

CLASS_LABELS = ("Mpox", "Chickenpox", "Measles", "Cowpox", "HFMD", "Healthy")


@dataclass(frozen=True)
class ImageRecord:
    id: str
    path: str
    label: str
    patient_id: str
    source_url: str | None = None
    crop: tuple[int, int, int, int] | None = None
    screened: bool = False
    verified_by: str | None = None

    def __post_init__(self):
        if self.label not in CLASS_LABELS:
            raise UnknownLabel(f"label {self.label!r} is not one of {CLASS_LABELS}")
        for name in ("id", "path", "patient_id", "source_url", "verified_by"):
            value = getattr(self, name)
            if value is not None and any(ch in value for ch in "\t\n\r"):
                raise ManifestFormatError(f"field {name} contains a tab or newline")


@dataclass(frozen=True)
class Manifest:
    records: tuple[ImageRecord, ...]
    class_counts: dict[str, int] = field(init=False)
    patient_count: int = field(init=False)

    def __post_init__(self):
        seen: set[str] = set()
        for rec in self.records:
            if rec.id in seen:
                raise ManifestFormatError(f"duplicate record id {rec.id!r}")
            seen.add(rec.id)
        counts = {label: 0 for label in CLASS_LABELS}
        for rec in self.records:
            counts[rec.label] += 1
        object.__setattr__(self, "class_counts", counts)
        object.__setattr__(
            self, "patient_count", len({rec.patient_id for rec in self.records})
        )

    def __len__(self) -> int:
        return len(self.records)

    def with_records(self, records) -> "Manifest":
        return Manifest(tuple(records))


def _encode_record(rec: ImageRecord) -> str:
    crop = "" if rec.crop is None else ",".join(str(v) for v in rec.crop)
    return "\t".join(
        [
            rec.id,
            rec.path,
            rec.label,
            rec.patient_id,
            rec.source_url or "",
            crop,
            "1" if rec.screened else "0",
            rec.verified_by or "",
        ]
    )


def _decode_record(line: str, lineno: int) -> ImageRecord:
    parts = line.split("\t")
    if len(parts) != 8:
        raise ManifestFormatError(f"line {lineno}: expected 8 fields, got {len(parts)}")
    rid, path, label, patient_id, source_url, crop_s, screened_s, verified_by = parts
    if screened_s not in ("0", "1"):
        raise ManifestFormatError(f"line {lineno}: screened must be 0 or 1")
    crop = None
    if crop_s:
        try:
            x, y, w, h = (int(v) for v in crop_s.split(","))
        except ValueError:
            raise ManifestFormatError(f"line {lineno}: bad crop {crop_s!r}") from None
        crop = (x, y, w, h)
    return ImageRecord(
        id=rid,
        path=path,
        label=label,
        patient_id=patient_id,
        source_url=source_url or None,
        crop=crop,
        screened=screened_s == "1",
        verified_by=verified_by or None,
    )


def dumps(manifest: Manifest) -> str:
    lines = [FORMAT_VERSION]
    lines.extend(_encode_record(rec) for rec in manifest.records)
    return "\n".join(lines) + "\n"


def loads(text: str) -> Manifest:
    lines = text.split("\n")
    if not lines or lines[0] != FORMAT_VERSION:
        raise ManifestFormatError(f"missing {FORMAT_VERSION} header")
    if lines[-1] == "":
        lines = lines[:-1]
    records = [_decode_record(line, i + 2) for i, line in enumerate(lines[1:])]
    return Manifest(tuple(records))


def save(manifest: Manifest, path: str | Path) -> None:
    Path(path).write_text(dumps(manifest), encoding="utf-8")


def load(path: str | Path) -> Manifest:
    return loads(Path(path).read_text(encoding="utf-8"))


def mark_screened(manifest: Manifest, passed_ids: set[str]) -> Manifest:
    """Return a manifest with screened=True exactly on the given record ids."""
    return manifest.with_records(
        replace(rec, screened=rec.id in passed_ids) for rec in manifest.records
    )
