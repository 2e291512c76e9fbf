import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.distance import pdist

from qkflow.data import (
    Dataset,
    filter_labels,
    generate,
    load_array,
    load_catalog,
    load_from_catalog,
    pca_reduce,
    quantum_relabel,
    resample,
    save_array,
    scale_features,
    split,
)
from qkflow.featuremaps import build_feature_map
from qkflow.kernelmachines import svm_predict, svm_train


class TestGenerate:
    def test_blobs_zero_noise(self):
        ds = generate("blobs", 8, 3, noise=0.0, seed=1)
        assert {tuple(r) for r in ds.X} == {(-0.5,) * 3, (0.5,) * 3}

    @pytest.mark.parametrize("kind", ["blobs", "circles", "linear_separable"])
    def test_balanced_and_deterministic(self, kind):
        ds = generate(kind, 20, 2, 0.1, 3)
        assert ds.class_counts() == {-1.0: 10, 1.0: 10}
        again = generate(kind, 20, 2, 0.1, 3)
        np.testing.assert_array_equal(ds.X, again.X)
        assert ds.provenance[0]["kind"] == kind

    @pytest.mark.parametrize("seed", range(3))
    def test_linear_separable_by_svm(self, seed):
        ds = generate("linear_separable", 30, 3, 0.05, seed)
        K = ds.X @ ds.X.T
        model = svm_train(K, ds.y, C=1e4, tol=1e-6)
        labels, _ = svm_predict(model, K)
        assert np.mean(labels == ds.y) == 1.0

    @pytest.mark.parametrize("args", [("blobs", 5, 2), ("blobs", 2, 2), ("circles", 8, 1), ("moons", 8, 2), ("blobs", 8, 0)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            generate(*args)


class TestQuantumRelabel:
    def test_median_split_on_ry(self):
        X = np.linspace(0.1, 3.0, 10)[:, None]
        ds = quantum_relabel(X, build_feature_map("angle", 1, 1), "Z")
        # <Z> = cos(x) decreases on (0, pi): the smaller half of the angles score high
        np.testing.assert_array_equal(ds.y, [1] * 5 + [-1] * 5)

    def test_negated_observable_inverts(self):
        X = np.random.default_rng(0).uniform(0, 3, (12, 2))
        fm = build_feature_map("zz", 2, 2)
        a = quantum_relabel(X, fm, "ZI")
        b = quantum_relabel(X, fm, "-ZI")
        np.testing.assert_array_equal(a.y, -b.y)
        assert abs(a.y.sum()) <= 1

    def test_degenerate(self):
        with pytest.raises(ValueError, match="degenerate"):
            quantum_relabel(np.ones((4, 1)), build_feature_map("angle", 1, 1), "Z")


class TestFilter:
    def ds3(self):
        return Dataset(np.arange(12.0).reshape(6, 2), [0, 1, 2, 0, 1, 2])

    def test_binary_remap(self):
        out = filter_labels(self.ds3(), {0, 1})
        np.testing.assert_array_equal(out.y, [-1, 1, -1, 1])
        np.testing.assert_array_equal(out.X[:, 0], [0, 2, 6, 8])

    def test_range(self):
        out = filter_labels(self.ds3(), between=(1.0, 2.0))
        np.testing.assert_array_equal(out.y, [-1, 1, -1, 1])

    def test_identity_on_binary(self):
        ds = generate("blobs", 8, 2, 0.1, 0)
        out = filter_labels(ds, {-1, 1})
        np.testing.assert_array_equal(out.y, ds.y)
        assert len(out.provenance) == len(ds.provenance) + 1

    def test_errors(self):
        with pytest.raises(ValueError):
            filter_labels(self.ds3(), {5})
        with pytest.raises(ValueError):
            filter_labels(self.ds3(), {0})


class TestPca:
    def test_line_exact(self):
        t = np.linspace(-2, 3, 9)
        X = np.column_stack([1 + t, 2 - 2 * t, 0.5 * t])
        out, tr = pca_reduce(Dataset(X, np.zeros(9), "regression"), 1)
        np.testing.assert_allclose(tr.inverse(out.X), X, atol=1e-8)

    def test_full_rank_preserves_distances(self):
        X = np.random.default_rng(0).normal(size=(10, 4))
        out, _ = pca_reduce(Dataset(X, np.zeros(10), "regression"), 4)
        np.testing.assert_allclose(pdist(out.X), pdist(X), atol=1e-8)

    def test_descending_variances(self):
        X = np.random.default_rng(1).normal(size=(30, 5)) * [5, 1, 3, 0.5, 2]
        out, tr = pca_reduce(Dataset(X, np.zeros(30), "regression"), 5)
        assert np.all(np.diff(out.X.var(axis=0)) <= 1e-12)
        assert np.all(np.diff(tr.variances) <= 0)

    def test_k_range(self):
        ds = Dataset(np.ones((4, 2)), np.zeros(4), "regression")
        for k in (0, 3):
            with pytest.raises(ValueError):
                pca_reduce(ds, k)


class TestScale:
    def test_minmax_endpoints(self):
        out, _ = scale_features(Dataset(np.array([[0.0], [2.0]]), [0, 1]), "minmax")
        np.testing.assert_array_equal(out.X[:, 0], [-1, 1])

    def test_standardize(self):
        X = np.random.default_rng(0).normal(3, 2, size=(20, 3))
        out, _ = scale_features(Dataset(X, np.zeros(20), "regression"), "standardize")
        np.testing.assert_allclose(out.X.mean(axis=0), 0, atol=1e-12)
        np.testing.assert_allclose(out.X.std(axis=0), 1, atol=1e-12)

    def test_constant_column(self):
        with pytest.raises(ValueError, match="constant"):
            scale_features(Dataset(np.ones((3, 1)), np.zeros(3), "regression"), "standardize")

    def test_uses_training_statistics(self):
        train = Dataset(np.array([[0.0], [4.0]]), [0, 1])
        _, tr = scale_features(train, "minmax")
        np.testing.assert_array_equal(tr.apply(np.array([[2.0], [8.0]]))[:, 0], [0, 3])

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000))
    def test_fitted_transforms_ignore_test_rows(self, seed):
        rng = np.random.default_rng(seed)
        ds = Dataset(rng.normal(size=(16, 3)), np.repeat([-1.0, 1.0], 8))
        parts = split(ds, 0.75, seed)
        _, s1 = scale_features(parts.train, "standardize")
        _, p1 = pca_reduce(parts.train, 2)
        perturbed = Dataset(
            np.vstack([parts.train.X, parts.test.X + rng.normal(size=parts.test.X.shape) * 10]),
            np.concatenate([parts.train.y, parts.test.y]),
        )
        train_again = Dataset(perturbed.X[: len(parts.train)], perturbed.y[: len(parts.train)])
        _, s2 = scale_features(train_again, "standardize")
        _, p2 = pca_reduce(train_again, 2)
        np.testing.assert_array_equal(s1.offset, s2.offset)
        np.testing.assert_array_equal(p1.components, p2.components)


class TestResample:
    def imbalanced(self):
        return Dataset(np.arange(12.0)[:, None], [1] * 10 + [-1] * 2)

    def test_undersample(self):
        out = resample(self.imbalanced(), "undersample", 0)
        assert out.class_counts() == {-1.0: 2, 1.0: 2}

    def test_oversample(self):
        ds = self.imbalanced()
        out = resample(ds, "oversample", 0)
        assert out.class_counts() == {-1.0: 10, 1.0: 10}
        assert {10.0, 11.0} <= set(out.X[out.y == -1, 0])

    def test_balanced_fixed_point(self):
        ds = generate("blobs", 8, 2, 0.1, 0)
        out = resample(ds, "undersample", 3)
        np.testing.assert_array_equal(np.sort(out.X, axis=0), np.sort(ds.X, axis=0))

    def test_deterministic(self):
        a = resample(self.imbalanced(), "oversample", 5)
        b = resample(self.imbalanced(), "oversample", 5)
        np.testing.assert_array_equal(a.X, b.X)

    def test_regression_rejected(self):
        with pytest.raises(ValueError):
            resample(Dataset(np.ones((4, 1)), np.arange(4.0), "regression"), "undersample")


class TestSplit:
    def test_counts(self):
        parts = split(generate("blobs", 8, 2, 0.1, 0), 0.75, 1)
        assert len(parts.train) == 6 and len(parts.test) == 2
        assert set(parts.train_indices).isdisjoint(parts.test_indices)
        assert sorted(np.concatenate([parts.train_indices, parts.test_indices])) == list(range(8))

    def test_stratified(self):
        parts = split(generate("blobs", 8, 2, 0.1, 0), 0.5, 4, stratified=True)
        assert parts.train.class_counts() == {-1.0: 2, 1.0: 2}
        assert parts.test.class_counts() == {-1.0: 2, 1.0: 2}

    def test_deterministic(self):
        ds = generate("circles", 20, 2, 0.1, 0)
        np.testing.assert_array_equal(split(ds, 0.7, 9).train_indices, split(ds, 0.7, 9).train_indices)

    def test_errors(self):
        ds = generate("blobs", 4, 2, 0.1, 0)
        for ratio in (0.0, 1.0, 0.01):
            with pytest.raises(ValueError):
                split(ds, ratio, 0)

    def test_original_unmodified(self):
        ds = generate("blobs", 8, 2, 0.1, 0)
        X0 = ds.X.copy()
        split(ds, 0.5, 0)
        scale_features(ds, "standardize")
        np.testing.assert_array_equal(ds.X, X0)
        assert len(ds.provenance) == 1


def test_catalog(tmp_path):
    X = np.random.default_rng(0).normal(size=(3, 5))  # stored as d x N
    save_array(tmp_path / "x.npy", X)
    save_array(tmp_path / "y.npy", np.array([1.0, -1.0, 1.0, -1.0, 1.0]))
    (tmp_path / "cat.json").write_text(json.dumps({"toy": {"x_path": "x.npy", "y_path": "y.npy", "task": "classification"}}))
    catalog = load_catalog(tmp_path / "cat.json")
    ds = load_from_catalog("toy", catalog, orientation="columns")
    assert ds.X.shape == (5, 3)
    assert ds.provenance[0]["orientation"] == "columns"
    with pytest.raises(KeyError):
        load_from_catalog("other", catalog)


def test_array_round_trip(tmp_path):
    a = np.random.default_rng(2).normal(size=(5, 3))
    save_array(tmp_path / "a.npy", a)
    assert load_array(tmp_path / "a.npy").tobytes() == a.tobytes()
    save_array(tmp_path / "y.npy", np.ones(4))
    assert load_array(tmp_path / "y.npy").shape == (4,)
