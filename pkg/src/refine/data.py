"""Datasets of feature vectors with labels, and their on-disk formats.

Two text formats are owned here:

* manifest — one JSON object per line with keys ``id``, ``label`` and an
  optional ``thumbnail`` (relative path). Line-oriented so it streams and
  diffs well.
* features — header line ``FVEC1 <rows> <cols>`` followed by one line of
  space-separated decimal numbers per item, in manifest order. Values are
  64-bit floats written with ``repr`` so a write/load round trip is
  bit-exact.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import FormatError, ShapeError, SplitError, ValidationError


@dataclass(frozen=True)
class ItemRecord:
    """One database item: identity, oracle label, optional thumbnail path."""

    id: str
    label: str
    thumbnail: str | None = None


@dataclass
class Dataset:
    """Ordered items plus (optionally) their feature matrix.

    Immutable by convention once loaded; every accessor returns copies or
    read-only views, so any number of sessions may share one instance.
    """

    items: list[ItemRecord]
    features: np.ndarray | None = None
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        index: dict[str, int] = {}
        for item in self.items:
            if not item.label:
                raise ValidationError(f"item {item.id!r} has an empty label")
            if item.id in index:
                raise ValidationError(f"duplicate item id {item.id!r}")
            index[item.id] = len(index)
        self._index = index
        if self.features is not None:
            feats = np.asarray(self.features, dtype=np.float64)
            if feats.ndim != 2:
                raise ShapeError(f"features must be 2-D, got shape {feats.shape}")
            if feats.shape[0] != len(self.items):
                raise ShapeError(
                    f"feature matrix has {feats.shape[0]} rows for {len(self.items)} items"
                )
            if feats.shape[1] < 1:
                raise ShapeError("feature dimensionality must be >= 1")
            bad = ~np.isfinite(feats)
            if bad.any():
                row = int(np.argwhere(bad)[0][0])
                raise ValidationError(f"non-finite feature value at row {row}")
            feats.setflags(write=False)
            self.features = feats

    def __len__(self) -> int:
        return len(self.items)

    @property
    def ids(self) -> list[str]:
        return [item.id for item in self.items]

    @property
    def dim(self) -> int:
        if self.features is None:
            raise ValidationError("dataset has no features attached")
        return self.features.shape[1]

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._index

    def row(self, item_id: str) -> int:
        try:
            return self._index[item_id]
        except KeyError:
            raise ValidationError(f"unknown item id {item_id!r}") from None

    def item(self, item_id: str) -> ItemRecord:
        return self.items[self.row(item_id)]

    def label(self, item_id: str) -> str:
        return self.item(item_id).label

    def vector(self, item_id: str) -> np.ndarray:
        if self.features is None:
            raise ValidationError("dataset has no features attached")
        return self.features[self.row(item_id)]

    def rows_for(self, item_ids: Iterable[str]) -> np.ndarray:
        """Feature rows for the given ids, in the given order."""
        if self.features is None:
            raise ValidationError("dataset has no features attached")
        idx = [self.row(i) for i in item_ids]
        return self.features[idx]

    def labels_by_id(self) -> dict[str, str]:
        return {item.id: item.label for item in self.items}

    def with_features(self, features: np.ndarray) -> "Dataset":
        return Dataset(items=list(self.items), features=features)

    def subset(self, item_ids: Sequence[str]) -> "Dataset":
        """New dataset restricted to ``item_ids``, in the given order."""
        items = [self.item(i) for i in item_ids]
        feats = self.rows_for(item_ids) if self.features is not None else None
        return Dataset(items=items, features=feats)


@dataclass(frozen=True)
class DatasetSplit:
    """Disjoint id lists whose union covers the dataset."""

    test: list[str]
    validation: list[str]
    retrieval_db: list[str]

    def to_dict(self) -> dict:
        return {
            "test": list(self.test),
            "validation": list(self.validation),
            "retrieval_db": list(self.retrieval_db),
        }

    @classmethod
    def from_dict(cls, payload: Mapping) -> "DatasetSplit":
        return cls(
            test=list(payload["test"]),
            validation=list(payload["validation"]),
            retrieval_db=list(payload["retrieval_db"]),
        )


def load_manifest(path: str | Path) -> Dataset:
    """Read a JSON-lines manifest into a Dataset without features."""
    items: list[ItemRecord] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict) or "id" not in obj or "label" not in obj:
                raise FormatError(f"{path}: line {lineno}: expected object with id and label")
            item_id = str(obj["id"])
            if item_id in seen:
                raise ValidationError(f"{path}: line {lineno}: duplicate item id {item_id!r}")
            seen.add(item_id)
            label = str(obj["label"])
            if not label:
                raise ValidationError(f"{path}: line {lineno}: empty label for id {item_id!r}")
            thumbnail = obj.get("thumbnail")
            items.append(ItemRecord(id=item_id, label=label, thumbnail=thumbnail))
    return Dataset(items=items)


def write_manifest(dataset: Dataset, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for item in dataset.items:
            obj: dict = {"id": item.id, "label": item.label}
            if item.thumbnail is not None:
                obj["thumbnail"] = item.thumbnail
            fh.write(json.dumps(obj) + "\n")


def load_features(path: str | Path, dataset: Dataset) -> Dataset:
    """Attach an FVEC1 feature matrix to ``dataset``; validates every value."""
    matrix = read_feature_matrix(path)
    if matrix.shape[0] != len(dataset):
        raise ShapeError(
            f"{path}: feature matrix has {matrix.shape[0]} rows, manifest has {len(dataset)} items"
        )
    return dataset.with_features(matrix)


def read_feature_matrix(path: str | Path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 3 or header[0] != "FVEC1":
            raise FormatError(f"{path}: line 1: expected header 'FVEC1 <rows> <cols>'")
        try:
            rows, cols = int(header[1]), int(header[2])
        except ValueError as exc:
            raise FormatError(f"{path}: line 1: non-integer row/col counts") from exc
        if rows < 0 or cols < 1:
            raise FormatError(f"{path}: line 1: invalid dimensions {rows}x{cols}")
        matrix = np.empty((rows, cols), dtype=np.float64)
        for r in range(rows):
            line = fh.readline()
            if not line:
                raise ShapeError(f"{path}: expected {rows} data rows, file ends after {r}")
            parts = line.split()
            if len(parts) != cols:
                raise ShapeError(f"{path}: line {r + 2}: expected {cols} values, got {len(parts)}")
            try:
                values = [float(p) for p in parts]
            except ValueError as exc:
                raise FormatError(f"{path}: line {r + 2}: unparseable number") from exc
            for v in values:
                if math.isnan(v) or math.isinf(v):
                    raise ValidationError(f"{path}: non-finite value at row {r}")
            matrix[r] = values
        if fh.readline().strip():
            raise ShapeError(f"{path}: more data rows than the declared {rows}")
    return matrix


def write_feature_matrix(matrix: np.ndarray, path: str | Path) -> None:
    arr = np.asarray(matrix, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"feature matrix must be 2-D, got shape {arr.shape}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"FVEC1 {arr.shape[0]} {arr.shape[1]}\n")
        for row in arr:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def split_dataset(
    dataset: Dataset,
    seed: int,
    n_test_per_label: int,
    n_validation: int,
    test_bias_scores: Mapping[str, float] | None = None,
) -> DatasetSplit:
    """Partition item ids into test / validation / retrieval_db.

    ``n_test_per_label`` ids are drawn per label for the test list,
    ``n_validation`` ids from the remainder for the validation list, and
    everything else lands in the retrieval database. Deterministic for a
    fixed seed.

    ``test_bias_scores`` optionally biases test selection: when given, the
    lowest-scoring ids per label are picked instead of uniform-random ones
    (callers typically pass a per-item iteration-0 precision).
    """
    if n_test_per_label < 0 or n_validation < 0:
        raise SplitError("counts must be non-negative")
    by_label: dict[str, list[str]] = {}
    for item in dataset.items:
        by_label.setdefault(item.label, []).append(item.id)

    rng = random.Random(seed)
    test: list[str] = []
    for label in sorted(by_label):
        pool = by_label[label]
        if len(pool) < n_test_per_label + 1:
            raise SplitError(
                f"label {label!r} has {len(pool)} items, needs >= {n_test_per_label + 1}"
            )
        if test_bias_scores is not None:
            picked = sorted(pool, key=lambda i: (test_bias_scores.get(i, 0.0), i))[
                :n_test_per_label
            ]
        else:
            picked = rng.sample(pool, n_test_per_label)
        test.extend(picked)

    test_set = set(test)
    remainder = [i for i in dataset.ids if i not in test_set]
    if len(remainder) < n_validation:
        raise SplitError(
            f"remaining pool has {len(remainder)} items, needs >= {n_validation} for validation"
        )
    validation = rng.sample(remainder, n_validation) if n_validation else []
    validation_set = set(validation)
    retrieval = [i for i in remainder if i not in validation_set]
    return DatasetSplit(test=test, validation=validation, retrieval_db=retrieval)
