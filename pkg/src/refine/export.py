"""Turn accumulated feedback into training datasets for external encoders.

Two exports: binary similar/dissimilar item pairs (every pair of relevant
items in an event is similar, every relevant x non-relevant pair is
dissimilar) and a multi-class manifest built from the group store (small
groups pruned, the rest split per group into train/validation).
"""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass, field
from itertools import combinations, product
from pathlib import Path
from typing import Mapping, Sequence

from .errors import ExportError
from .groups import FeedbackEvent, GroupStore


@dataclass(frozen=True)
class PairRecord:
    """One labeled item pair; ids are canonically ordered (id_a < id_b)."""

    id_a: str
    id_b: str
    label: int  # 1 similar, 0 dissimilar
    source_event: tuple[str, int]  # (session_id, iteration)
    flagged: bool = False  # labeled both ways across events; latest label kept


def _canonical(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a < b else (b, a)


def pairs_for_event(event: FeedbackEvent) -> list[PairRecord]:
    """All pairs one event contributes, before any deduplication.

    With r1 relevant and r2 non-relevant items shown, that is C(r1, 2)
    similar pairs plus r1 * r2 dissimilar ones.
    """
    source = (event.session_id, event.iteration)
    relevant = sorted(set(event.relevant))
    nonrelevant = sorted(set(event.shown) - set(relevant))
    records = [
        PairRecord(*_canonical(a, b), label=1, source_event=source)
        for a, b in combinations(relevant, 2)
    ]
    records.extend(
        PairRecord(*_canonical(a, b), label=0, source_event=source)
        for a, b in product(relevant, nonrelevant)
    )
    return records


def export_pairs(events: Sequence[FeedbackEvent]) -> list[PairRecord]:
    """Pool pairs across events, deduplicated by the canonical id pair.

    A pair labeled both similar and dissimilar by different events keeps the
    most recent label (event order) and is flagged. Output is sorted by id
    pair so it does not depend on set iteration order.
    """
    seen: dict[tuple[str, str], PairRecord] = {}
    for event in events:
        for record in pairs_for_event(event):
            key = (record.id_a, record.id_b)
            previous = seen.get(key)
            if previous is not None and previous.label != record.label:
                record = PairRecord(
                    record.id_a, record.id_b, record.label, record.source_event, flagged=True
                )
            elif previous is not None and previous.flagged:
                record = PairRecord(
                    record.id_a, record.id_b, record.label, record.source_event, flagged=True
                )
            seen[key] = record
    return [seen[key] for key in sorted(seen)]


def write_pairs_csv(
    records: Sequence[PairRecord],
    path: str | Path,
    thumbnails: Mapping[str, str | None] | None = None,
) -> None:
    """Pairs CSV with header id_a,id_b,label,flagged.

    When a thumbnail mapping is supplied, sidecar columns thumbnail_a and
    thumbnail_b let external training code find the pixels.
    """
    sidecar = thumbnails is not None
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        header = ["id_a", "id_b", "label", "flagged"]
        if sidecar:
            header += ["thumbnail_a", "thumbnail_b"]
        writer.writerow(header)
        for rec in records:
            row: list = [rec.id_a, rec.id_b, rec.label, int(rec.flagged)]
            if sidecar:
                row += [thumbnails.get(rec.id_a) or "", thumbnails.get(rec.id_b) or ""]
            writer.writerow(row)


@dataclass
class ClassDatasetManifest:
    """Per-group train/validation id lists, plus the groups pruned for size."""

    groups: dict[str, dict[str, list[str]]] = field(default_factory=dict)
    pruned_groups: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"groups": self.groups, "pruned_groups": list(self.pruned_groups)}


def export_class_dataset(
    store: GroupStore,
    min_size: int = 10,
    val_fraction: float = 0.2,
    seed: int = 0,
) -> ClassDatasetManifest:
    """Split every sufficiently large group into train/validation id lists.

    Groups smaller than ``min_size`` are dropped and listed; the rest give
    floor(size * val_fraction) validation ids each, sampled deterministically
    per seed.
    """
    if store.group_count == 0:
        raise ExportError("group store is empty; nothing to export")
    if not 0 <= val_fraction < 1:
        raise ExportError(f"val_fraction must be in [0, 1), got {val_fraction}")
    manifest = ClassDatasetManifest()
    rng = random.Random(seed)
    for root in store.roots():
        members = store.members(root)
        if len(members) < min_size:
            manifest.pruned_groups.append(root)
            continue
        n_val = math.floor(len(members) * val_fraction)
        shuffled = rng.sample(members, len(members))
        manifest.groups[root] = {
            "validation": sorted(shuffled[:n_val]),
            "train": sorted(shuffled[n_val:]),
        }
    if not manifest.groups:
        raise ExportError(f"all {store.group_count} groups fall below min_size={min_size}")
    return manifest


def write_class_manifest(manifest: ClassDatasetManifest, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
