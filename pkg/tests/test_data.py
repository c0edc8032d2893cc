from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from refine.data import (
    Dataset,
    ItemRecord,
    load_features,
    load_manifest,
    read_feature_matrix,
    split_dataset,
    write_feature_matrix,
    write_manifest,
)
from refine.errors import FormatError, ShapeError, SplitError, ValidationError

from .conftest import make_dataset


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestManifest:
    def test_items_keep_file_order(self, tmp_path):
        path = tmp_path / "m.jsonl"
        write_lines(
            path,
            [
                '{"id": "a", "label": "cat"}',
                '{"id": "b", "label": "dog", "thumbnail": "t/b.png"}',
                '{"id": "c", "label": "cat"}',
            ],
        )
        ds = load_manifest(path)
        assert ds.ids == ["a", "b", "c"]
        assert ds.item("b").thumbnail == "t/b.png"
        assert ds.label("c") == "cat"

    def test_duplicate_id_names_the_id(self, tmp_path):
        path = tmp_path / "m.jsonl"
        write_lines(path, ['{"id": "a", "label": "x"}', '{"id": "a", "label": "y"}'])
        with pytest.raises(ValidationError, match="'a'"):
            load_manifest(path)

    def test_empty_file_is_a_valid_empty_dataset(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text("", encoding="utf-8")
        assert len(load_manifest(path)) == 0

    def test_bad_json_reports_line_number(self, tmp_path):
        path = tmp_path / "m.jsonl"
        write_lines(path, ['{"id": "a", "label": "x"}', "{oops"])
        with pytest.raises(FormatError, match="line 2"):
            load_manifest(path)

    def test_empty_label_rejected(self, tmp_path):
        path = tmp_path / "m.jsonl"
        write_lines(path, ['{"id": "a", "label": ""}'])
        with pytest.raises(ValidationError):
            load_manifest(path)

    def test_round_trip(self, tmp_path):
        ds = make_dataset(thumbnails=True)
        path = tmp_path / "m.jsonl"
        write_manifest(ds, path)
        again = load_manifest(path)
        assert again.items == ds.items


class TestFeatures:
    def test_load_attaches_matching_matrix(self, tmp_path):
        path = tmp_path / "f.fvec"
        write_lines(path, ["FVEC1 3 4"] + ["0.0 1.0 2.0 3.0"] * 3)
        ds = Dataset(items=[ItemRecord(str(i), "x") for i in range(3)])
        ds = load_features(path, ds)
        assert ds.dim == 4

    def test_row_count_mismatch(self, tmp_path):
        path = tmp_path / "f.fvec"
        write_lines(path, ["FVEC1 2 4"] + ["0.0 1.0 2.0 3.0"] * 2)
        ds = Dataset(items=[ItemRecord(str(i), "x") for i in range(3)])
        with pytest.raises(ShapeError):
            load_features(path, ds)

    def test_nan_cites_row(self, tmp_path):
        path = tmp_path / "f.fvec"
        write_lines(path, ["FVEC1 3 2", "0.0 1.0", "nan 1.0", "2.0 3.0"])
        with pytest.raises(ValidationError, match="row 1"):
            read_feature_matrix(path)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "f.fvec"
        write_lines(path, ["FVEC2 1 1", "0.0"])
        with pytest.raises(FormatError, match="line 1"):
            read_feature_matrix(path)

    def test_round_trip_is_bit_exact(self, tmp_path):
        rng = np.random.default_rng(7)
        matrix = rng.normal(size=(20, 6)) * 10.0 ** rng.integers(-8, 8, size=(20, 6))
        path = tmp_path / "f.fvec"
        write_feature_matrix(matrix, path)
        again = read_feature_matrix(path)
        assert again.shape == matrix.shape
        assert np.array_equal(again, matrix)  # exact, not approx

    def test_manifest_plus_features_round_trip(self, tmp_path):
        ds = make_dataset(seed=3)
        write_manifest(ds, tmp_path / "m.jsonl")
        write_feature_matrix(ds.features, tmp_path / "f.fvec")
        again = load_features(tmp_path / "f.fvec", load_manifest(tmp_path / "m.jsonl"))
        assert again.items == ds.items
        assert np.array_equal(again.features, ds.features)


class TestSplit:
    def test_paper_scale_arithmetic(self):
        # 102 labels whose sizes sum to 9144, one test item per label,
        # 1000 validation -> 8042 retrieval ids
        sizes = [34 + (i % 80) for i in range(102)]
        sizes[-1] += 9144 - sum(sizes)
        items = []
        for li, size in enumerate(sizes):
            for j in range(size):
                items.append(ItemRecord(id=f"i{li:03d}-{j:04d}", label=f"c{li:03d}"))
        ds = Dataset(items=items)
        split = split_dataset(ds, seed=11, n_test_per_label=1, n_validation=1000)
        assert len(split.test) == 102
        assert len(split.validation) == 1000
        assert len(split.retrieval_db) == 8042

    def test_zero_validation(self, small_dataset):
        split = split_dataset(small_dataset, seed=0, n_test_per_label=1, n_validation=0)
        assert split.validation == []
        assert len(split.retrieval_db) == len(small_dataset) - len(split.test)

    def test_same_seed_same_split(self, small_dataset):
        a = split_dataset(small_dataset, seed=5, n_test_per_label=1, n_validation=3)
        b = split_dataset(small_dataset, seed=5, n_test_per_label=1, n_validation=3)
        assert a == b

    def test_insufficient_label_named(self):
        items = [ItemRecord("a", "rare"), ItemRecord("b", "common"), ItemRecord("c", "common")]
        ds = Dataset(items=items)
        with pytest.raises(SplitError, match="rare"):
            split_dataset(ds, seed=0, n_test_per_label=1, n_validation=0)

    def test_bias_scores_pick_lowest(self, small_dataset):
        scores = {i: float(idx) for idx, i in enumerate(small_dataset.ids)}
        split = split_dataset(
            small_dataset, seed=0, n_test_per_label=1, n_validation=0, test_bias_scores=scores
        )
        # first item of each label carries the lowest score
        expected = [i for i in small_dataset.ids if i.endswith("-0000")]
        assert sorted(split.test) == sorted(expected)

    @settings(max_examples=50, deadline=None)
    @given(
        n_labels=st.integers(1, 5),
        per_label=st.integers(2, 8),
        seed=st.integers(0, 10_000),
        n_test=st.integers(1, 1),
        data=st.data(),
    )
    def test_partition_property(self, n_labels, per_label, seed, n_test, data):
        ds = make_dataset(n_labels=n_labels, per_label=per_label, dim=2, seed=seed)
        max_validation = len(ds) - n_labels * n_test
        n_validation = data.draw(st.integers(0, max_validation))
        split = split_dataset(ds, seed=seed, n_test_per_label=n_test, n_validation=n_validation)
        test, val, ret = set(split.test), set(split.validation), set(split.retrieval_db)
        assert test | val | ret == set(ds.ids)
        assert not (test & val) and not (test & ret) and not (val & ret)
        assert len(split.test) == n_labels * n_test
        assert len(split.validation) == n_validation


class TestDataset:
    def test_subset_preserves_given_order(self, small_dataset):
        picked = [small_dataset.ids[4], small_dataset.ids[1]]
        sub = small_dataset.subset(picked)
        assert sub.ids == picked
        assert np.array_equal(sub.features[0], small_dataset.vector(picked[0]))

    def test_unknown_id(self, small_dataset):
        with pytest.raises(ValidationError, match="nope"):
            small_dataset.vector("nope")

    def test_features_are_read_only(self, small_dataset):
        with pytest.raises(ValueError):
            small_dataset.features[0, 0] = 99.0
