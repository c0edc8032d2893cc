from __future__ import annotations

import numpy as np
import pytest

from refine.data import Dataset, ItemRecord


def make_dataset(n_labels=3, per_label=4, dim=5, seed=0, thumbnails=False) -> Dataset:
    rng = np.random.default_rng(seed)
    items = []
    for li in range(n_labels):
        label = f"lab{li:03d}"
        for j in range(per_label):
            thumb = f"thumbs/{label}-{j}.png" if thumbnails else None
            items.append(ItemRecord(id=f"{label}-{j:04d}", label=label, thumbnail=thumb))
    features = rng.normal(size=(len(items), dim))
    return Dataset(items=items, features=features)


@pytest.fixture
def small_dataset() -> Dataset:
    return make_dataset()
