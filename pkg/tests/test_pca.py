from __future__ import annotations

import numpy as np
import pytest

from refine.errors import ParameterError, ShapeError
from refine.pca import PcaReducer, fit_pca

from .oracles import pca_covariance_eig


def random_matrix(rows=50, cols=8, seed=0):
    return np.random.default_rng(seed).normal(size=(rows, cols))


class TestFit:
    def test_line_in_3d(self):
        rng = np.random.default_rng(1)
        t = rng.normal(size=100)
        direction = np.array([1.0, 2.0, -2.0]) / 3.0
        X = np.outer(t, direction) + np.array([5.0, -3.0, 0.5])
        model = fit_pca(X, 1)
        assert model.explained_variance_[0] == pytest.approx(np.var(t, ddof=1), rel=1e-9)
        cos = abs(model.components_[0] @ direction)
        assert cos == pytest.approx(1.0, abs=1e-9)

    def test_identical_rows_zero_variance(self):
        X = np.tile([1.0, 2.0, 3.0], (5, 1))
        model = fit_pca(X, 1)
        assert model.explained_variance_[0] == pytest.approx(0.0, abs=1e-12)

    def test_full_k_preserves_pairwise_distances(self):
        X = random_matrix(rows=30, cols=6, seed=2)
        Z = fit_pca(X, 6).transform(X)
        for i in range(10):
            for j in range(i):
                orig = np.linalg.norm(X[i] - X[j])
                proj = np.linalg.norm(Z[i] - Z[j])
                assert proj == pytest.approx(orig, abs=1e-9)

    def test_matches_covariance_eigendecomposition_oracle(self):
        X = random_matrix(rows=60, cols=10, seed=3)
        model = fit_pca(X, 5)
        mean, comps, var = pca_covariance_eig(X, 5)
        assert np.allclose(model.mean_, mean, atol=1e-12)
        assert np.allclose(model.explained_variance_, var, atol=1e-8)
        for row, expect in zip(model.components_, comps):
            # same sign convention on both sides; rows must agree directly
            assert np.allclose(row, expect, atol=1e-6)

    def test_k_out_of_range(self):
        X = random_matrix(rows=5, cols=3)
        with pytest.raises(ParameterError):
            fit_pca(X, 4)
        with pytest.raises(ParameterError):
            fit_pca(X, 0)

    def test_clamp_mode(self):
        X = random_matrix(rows=5, cols=3)
        model = PcaReducer(n_components=100, clamp=True).fit(X)
        assert model.components_.shape[0] == 3

    def test_variance_non_increasing(self):
        for seed in range(5):
            model = fit_pca(random_matrix(seed=seed), 8)
            ev = model.explained_variance_
            assert np.all(np.diff(ev) <= 1e-12)

    def test_orthonormal_components(self):
        model = fit_pca(random_matrix(rows=40, cols=12, seed=4), 6)
        gram = model.components_ @ model.components_.T
        assert np.allclose(gram, np.eye(6), atol=1e-6)

    def test_deterministic_sign(self):
        X = random_matrix(rows=25, cols=5, seed=5)
        a = fit_pca(X, 4)
        b = fit_pca(X.copy(), 4)
        assert np.array_equal(a.components_, b.components_)
        # the convention itself: largest-magnitude entry is positive
        for row in a.components_:
            assert row[np.argmax(np.abs(row))] > 0


class TestTransform:
    def test_mean_row_maps_to_zero(self):
        X = random_matrix(rows=20, cols=4, seed=6)
        model = fit_pca(X, 3)
        z = model.transform(model.mean_[None, :])
        assert np.allclose(z, 0.0, atol=1e-12)

    def test_column_variances_equal_explained_variance(self):
        X = random_matrix(rows=80, cols=7, seed=7)
        model = fit_pca(X, 4)
        Z = model.transform(X)
        assert np.allclose(Z.var(axis=0, ddof=1), model.explained_variance_, atol=1e-6)

    def test_single_row_shape(self):
        X = random_matrix(rows=10, cols=5, seed=8)
        model = fit_pca(X, 2)
        assert model.transform(X[:1]).shape == (1, 2)

    def test_dim_mismatch(self):
        model = fit_pca(random_matrix(), 2)
        with pytest.raises(ShapeError):
            model.transform(np.zeros((3, 9)))

    def test_projection_idempotent(self):
        X = random_matrix(rows=30, cols=6, seed=9)
        model = fit_pca(X, 3)
        Z = model.transform(X)
        Z2 = model.transform(model.inverse_transform(Z))
        assert np.allclose(Z, Z2, atol=1e-9)


class TestPersistence:
    def test_save_load_round_trip(self, tmp_path):
        model = fit_pca(random_matrix(seed=10), 4)
        path = tmp_path / "model.pca"
        model.save(path)
        again = PcaReducer.load(path)
        assert np.array_equal(again.mean_, model.mean_)
        assert np.array_equal(again.components_, model.components_)
        assert np.array_equal(again.explained_variance_, model.explained_variance_)

    def test_get_params_round_trip(self):
        model = PcaReducer(n_components=7, clamp=True)
        assert model.get_params() == {"n_components": 7, "clamp": True}
        model.set_params(n_components=3)
        assert model.n_components == 3
