from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from refine.data import Dataset, ItemRecord
from refine.errors import ParameterError, ShapeError
from refine.ranking import rank, rank_rows, weighted_l1

from .oracles import l1_weighted, rank_full_sort


def db_from_rows(rows) -> Dataset:
    items = [ItemRecord(id=f"i{k:04d}", label="x") for k in range(len(rows))]
    return Dataset(items=items, features=np.asarray(rows, dtype=float))


class TestWeightedL1:
    def test_identity(self):
        a = np.array([3.0, -1.0, 0.5])
        assert weighted_l1(a, a, [7.0, 1.0, 2.0]) == 0.0

    def test_hand_example(self):
        assert weighted_l1([1.0, 0.0], [0.0, 1.0], [2.0, 3.0]) == pytest.approx(5.0)

    def test_all_ones_reduces_to_plain_l1(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            a, b = rng.normal(size=6), rng.normal(size=6)
            ours = weighted_l1(a, b, np.ones(6))
            plain = sum(abs(x - y) for x, y in zip(a, b))
            assert ours == pytest.approx(plain, rel=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            weighted_l1([1.0, 2.0], [1.0], [1.0, 1.0])

    def test_symmetry_and_triangle(self):
        rng = np.random.default_rng(1)
        w = rng.uniform(0, 2, size=5)
        for _ in range(50):
            a, b, c = rng.normal(size=5), rng.normal(size=5), rng.normal(size=5)
            assert weighted_l1(a, b, w) == pytest.approx(weighted_l1(b, a, w), rel=1e-12)
            assert weighted_l1(a, c, w) <= weighted_l1(a, b, w) + weighted_l1(b, c, w) + 1e-12


class TestRank:
    def test_limit_zero(self, small_dataset):
        assert rank(np.zeros(5), small_dataset, limit=0) == []

    def test_exclude_everything(self, small_dataset):
        out = rank(np.zeros(5), small_dataset, exclude=set(small_dataset.ids), limit=3)
        assert out == []

    def test_negative_limit(self, small_dataset):
        with pytest.raises(ParameterError):
            rank(np.zeros(5), small_dataset, limit=-1)

    def test_matches_full_sort_oracle_with_ties(self):
        rng = np.random.default_rng(2)
        # quantized coordinates force plenty of exact distance ties
        rows = rng.integers(0, 3, size=(1000, 4)).astype(float)
        db = db_from_rows(rows)
        query = rng.integers(0, 3, size=4).astype(float)
        weights = rng.integers(1, 4, size=4).astype(float)
        exclude = set(rng.choice(db.ids, size=100, replace=False))
        ours = rank(query, db, weights, exclude=exclude, limit=20)
        expected = rank_full_sort(query, list(zip(db.ids, rows)), weights, exclude, 20)
        assert [(e.id, e.distance) for e in ours] == [
            (i, pytest.approx(d, abs=1e-12)) for i, d in expected
        ]

    def test_distances_non_decreasing_and_exclusion_sound(self, small_dataset):
        exclude = set(small_dataset.ids[:3])
        out = rank(np.zeros(5), small_dataset, exclude=exclude, limit=8)
        dists = [e.distance for e in out]
        assert dists == sorted(dists)
        assert not ({e.id for e in out} & exclude)
        assert len({e.id for e in out}) == len(out)

    def test_scale_covariance(self):
        rng = np.random.default_rng(3)
        rows = rng.normal(size=(50, 6))
        db = db_from_rows(rows)
        query = rng.normal(size=6)
        w = rng.uniform(0.1, 2.0, size=6)
        base = rank(query, db, w, limit=50)
        scaled = rank(query, db, 3.0 * w, limit=50)
        assert [e.id for e in base] == [e.id for e in scaled]
        for a, b in zip(base, scaled):
            assert b.distance == pytest.approx(3.0 * a.distance, rel=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(
        seed=st.integers(0, 10_000),
        n=st.integers(1, 40),
        limit=st.integers(0, 45),
        n_exclude=st.integers(0, 10),
    )
    def test_rank_rows_property(self, seed, n, limit, n_exclude):
        rng = np.random.default_rng(seed)
        rows = rng.integers(-2, 3, size=(n, 3)).astype(float)
        ids = [f"i{k:03d}" for k in range(n)]
        exclude = set(rng.choice(ids, size=min(n_exclude, n), replace=False))
        query = rng.integers(-2, 3, size=3).astype(float)
        w = rng.integers(0, 3, size=3).astype(float)
        ours = rank_rows(query, rows, ids, w, exclude=exclude, limit=limit)
        expected = rank_full_sort(query, list(zip(ids, rows)), w, exclude, limit)
        assert [(e.id, e.distance) for e in ours] == expected
