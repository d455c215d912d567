"""Patient-independent fold planning.

Five independently seeded 70:20:10 splits (fold k uses seed + k). Within
each split, patients are grouped by their dominant class and packed
greedily, largest patient first, into the partition with the biggest
remaining image-count deficit. Ties prefer train, then val, then test.

Fold-plan file format ("mslfoldplan/1"): version line, a ``seed`` line,
then one ``fold<TAB>partition<TAB>patient_id`` line per assignment,
sorted by (fold, partition order, patient id).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyClass, InsufficientPatients, ManifestFormatError
from .manifest import CLASS_LABELS, Manifest

FORMAT_VERSION = "mslfoldplan/1"

PARTITIONS = ("train", "val", "test")
SPLIT_FRACTIONS = (0.7, 0.2, 0.1)
FOLD_COUNT = 5


@dataclass(frozen=True)
class FoldAssignment:
    train: frozenset[str]
    val: frozenset[str]
    test: frozenset[str]

    def partition_of(self, patient_id: str) -> str | None:
        for name in PARTITIONS:
            if patient_id in getattr(self, name):
                return name
        return None


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple[FoldAssignment, ...]
    seed: int

    def __post_init__(self):
        if len(self.folds) != FOLD_COUNT:
            raise ValueError(f"expected {FOLD_COUNT} folds, got {len(self.folds)}")


def _patients_by_dominant_class(manifest: Manifest):
    per_patient: dict[str, dict[str, int]] = {}
    for rec in manifest.records:
        per_patient.setdefault(rec.patient_id, {}).setdefault(rec.label, 0)
        per_patient[rec.patient_id][rec.label] += 1
    dominant: dict[str, list[tuple[str, int]]] = {label: [] for label in CLASS_LABELS}
    for pid in sorted(per_patient):
        counts = per_patient[pid]
        label = max(CLASS_LABELS, key=lambda lb: (counts.get(lb, 0), -CLASS_LABELS.index(lb)))
        dominant[label].append((pid, counts[label]))
    return dominant


def make_folds(manifest: Manifest, seed: int) -> FoldPlan:
    """Deterministic pure function of (manifest, seed)."""
    if manifest.patient_count < 10:
        raise InsufficientPatients(
            f"need >= 10 patients, manifest has {manifest.patient_count}"
        )
    dominant = _patients_by_dominant_class(manifest)
    for label in CLASS_LABELS:
        if manifest.class_counts[label] > 0 and not dominant[label]:
            raise EmptyClass(f"class {label} has images but no assignable patient")

    all_pids = sorted({rec.patient_id for rec in manifest.records})
    folds = []
    for fold_index in range(FOLD_COUNT):
        rng = np.random.default_rng(seed + fold_index)
        tiebreak = dict(zip(all_pids, rng.random(len(all_pids))))
        assignment: dict[str, list[str]] = {name: [] for name in PARTITIONS}
        for label in CLASS_LABELS:
            patients = sorted(dominant[label], key=lambda pc: (-pc[1], tiebreak[pc[0]]))
            total = sum(count for _, count in patients)
            targets = [frac * total for frac in SPLIT_FRACTIONS]
            placed = [0.0, 0.0, 0.0]
            for pid, count in patients:
                deficits = [targets[i] - placed[i] for i in range(3)]
                part = max(range(3), key=lambda i: (deficits[i], -i))
                assignment[PARTITIONS[part]].append(pid)
                placed[part] += count
        folds.append(
            FoldAssignment(
                train=frozenset(assignment["train"]),
                val=frozenset(assignment["val"]),
                test=frozenset(assignment["test"]),
            )
        )
    return FoldPlan(folds=tuple(folds), seed=seed)


def class_image_shares(manifest: Manifest, fold: FoldAssignment) -> dict[str, tuple[float, float, float]]:
    """Per-class (train, val, test) image-count fractions under a fold."""
    totals: dict[str, list[int]] = {label: [0, 0, 0] for label in CLASS_LABELS}
    for rec in manifest.records:
        part = fold.partition_of(rec.patient_id)
        if part is None:
            continue
        totals[rec.label][PARTITIONS.index(part)] += 1
    shares = {}
    for label, counts in totals.items():
        total = sum(counts)
        if total:
            shares[label] = tuple(c / total for c in counts)
    return shares


def dumps(plan: FoldPlan) -> str:
    lines = [FORMAT_VERSION, f"seed\t{plan.seed}"]
    for fold_index, fold in enumerate(plan.folds):
        for part in PARTITIONS:
            for pid in sorted(getattr(fold, part)):
                lines.append(f"{fold_index}\t{part}\t{pid}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> FoldPlan:
    lines = text.split("\n")
    if not lines or lines[0] != FORMAT_VERSION:
        raise ManifestFormatError(f"missing {FORMAT_VERSION} header")
    if len(lines) < 2 or not lines[1].startswith("seed\t"):
        raise ManifestFormatError("missing seed line")
    seed = int(lines[1].split("\t", 1)[1])
    if lines[-1] == "":
        lines = lines[:-1]
    buckets: list[dict[str, set[str]]] = [
        {name: set() for name in PARTITIONS} for _ in range(FOLD_COUNT)
    ]
    for lineno, line in enumerate(lines[2:], start=3):
        parts = line.split("\t")
        if len(parts) != 3 or parts[1] not in PARTITIONS:
            raise ManifestFormatError(f"line {lineno}: bad fold assignment {line!r}")
        fold_index = int(parts[0])
        if not 0 <= fold_index < FOLD_COUNT:
            raise ManifestFormatError(f"line {lineno}: fold index out of range")
        buckets[fold_index][parts[1]].add(parts[2])
    folds = tuple(
        FoldAssignment(
            train=frozenset(b["train"]), val=frozenset(b["val"]), test=frozenset(b["test"])
        )
        for b in buckets
    )
    return FoldPlan(folds=folds, seed=seed)


def save(plan: FoldPlan, path: str | Path) -> None:
    Path(path).write_text(dumps(plan), encoding="utf-8")


def load(path: str | Path) -> FoldPlan:
    return loads(Path(path).read_text(encoding="utf-8"))
