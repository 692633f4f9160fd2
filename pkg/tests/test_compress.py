import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import sfe_greedy
from recstack.compress import (
    THREE_LAYER,
    TWO_LAYER,
    CompressionPlan,
    SfeConfig,
    compress,
    layer_widths,
    percentile_mask,
    sfe_select,
    sfe_trace,
)
from recstack.compress.attention import attention_select
from recstack.compress.autoencoder import AutoencoderModel, ae_fit_transform
from recstack.data import FeatureMatrix
from recstack.errors import EmptyMatrix, WidthTooSmall


def labelled(n=200, d=6, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = (X[:, 0] + 0.3 * rng.normal(size=n) > 0).astype(int)
    return X, y


class TestSfe:
    def test_first_pick_is_most_relevant(self):
        X, y = labelled()
        assert sfe_trace(X, y).selected[0] == 0

    def test_duplicate_column_utility_halved(self):
        rng = np.random.default_rng(1)
        base = rng.normal(size=300)
        y = (base > 0).astype(int)
        trace = sfe_trace(np.column_stack([base, base]), y, SfeConfig(max_features=2))
        assert trace.selected == (0, 1)
        assert trace.utilities[1] == pytest.approx(trace.utilities[0] / 2, rel=1e-12)

    def test_default_budget(self):
        assert SfeConfig().budget(10) == 4
        assert SfeConfig().budget(1) == 1
        assert SfeConfig(max_features=3).budget(10) == 3
        assert SfeConfig(min_utility=0.1).budget(10) == 10

    def test_min_utility_stops_early(self):
        X, y = labelled(d=8)
        trace = sfe_trace(X, y, SfeConfig(min_utility=0.2))
        assert trace.selected == (0,) or all(u >= 0.2 for u in trace.utilities[1:])

    def test_applied_to_test_side(self):
        X, y = labelled()
        train, test = FeatureMatrix(X[:150]), FeatureMatrix(X[150:])
        selected, (tr, te) = sfe_select(train, y[:150], X_test=test)
        np.testing.assert_array_equal(te.values, X[150:][:, list(selected)])
        assert tr.names == te.names

    def test_empty_matrix(self):
        with pytest.raises(EmptyMatrix):
            sfe_trace(np.zeros((5, 0)), np.zeros(5))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**31), st.integers(2, 12), st.integers(2, 4))
    def test_matches_oracle(self, seed, d, n_classes):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(60, d)) @ rng.normal(size=(d, d))
        y = rng.integers(0, n_classes, size=60)
        budget = math.ceil(math.sqrt(d))
        expected = sfe_greedy([X[:, j].tolist() for j in range(d)], y.tolist(), budget)
        assert list(sfe_trace(X, y).selected) == expected


class TestAutoencoder:
    @pytest.mark.parametrize("d", range(2, 65))
    def test_widths(self, d):
        assert layer_widths(d, TWO_LAYER) == [d, math.ceil(d / 3)]
        assert layer_widths(d, THREE_LAYER) == [d, math.ceil(d / 2), math.ceil(d / 3)]

    def test_known_widths(self):
        assert layer_widths(9) == [9, 3]
        assert layer_widths(12, THREE_LAYER) == [12, 6, 4]

    def test_too_narrow(self):
        with pytest.raises(WidthTooSmall):
            layer_widths(1)

    @pytest.mark.parametrize("depth", [TWO_LAYER, THREE_LAYER])
    def test_rank_one_reconstruction(self, depth):
        rng = np.random.default_rng(0)
        t = rng.normal(size=(100, 1))
        v = rng.normal(size=(1, 6))
        X = t @ v + 0.01 * rng.normal(size=(100, 6))
        # oracle: best rank-1 reconstruction via SVD of the centred data
        Xc = X - X.mean(axis=0)
        u, s, vt = np.linalg.svd(Xc, full_matrices=False)
        pca_err = np.mean((Xc - s[0] * np.outer(u[:, 0], vt[0])) ** 2) / np.mean(Xc ** 2)
        assert pca_err < 0.001
        model = AutoencoderModel(6, depth=depth, seed=0).fit(X)
        rel = np.mean((model.reconstruct(X) - X) ** 2) / np.mean(Xc ** 2)
        assert rel < 0.05
        assert model.loss_history[-1] < model.loss_history[0]

    def test_test_side_uses_train_fit(self):
        X, _ = labelled(120, d=7)
        train, test = FeatureMatrix(X[:90]), FeatureMatrix(X[90:])
        model, (tr, te) = ae_fit_transform(train, test, seed=3, epochs=50)
        assert tr.cols == te.cols == 3
        np.testing.assert_array_equal(te.values, model.encode(X[90:]))
        assert all(c.origin == "compressed" for c in tr.columns)

    def test_deterministic(self):
        X, _ = labelled(80, d=5)
        a = AutoencoderModel(5, seed=4, epochs=30).fit(X).encode(X)
        b = AutoencoderModel(5, seed=4, epochs=30).fit(X).encode(X)
        assert np.array_equal(a, b)


class TestAttention:
    def test_mask_eight_distinct(self):
        weights = np.arange(1, 9) / 36.0
        assert percentile_mask(weights).tolist() == [6, 7]

    def test_mask_uniform_keeps_all(self):
        assert percentile_mask(np.full(5, 0.2)).tolist() == [0, 1, 2, 3, 4]

    def test_informative_column_kept(self):
        X, y = labelled(300, d=6)
        hits = 0
        for seed in range(10):
            selector, _ = attention_select(FeatureMatrix(X), None, y, seed=seed)
            hits += 0 in selector.kept_indices_
        assert hits >= 9

    def test_same_mask_on_both_sides(self):
        X, y = labelled(200, d=8)
        selector, (tr, te) = attention_select(FeatureMatrix(X[:150]), FeatureMatrix(X[150:]), y[:150], seed=1)
        kept = selector.kept_indices_.tolist()
        np.testing.assert_array_equal(tr.values, X[:150][:, kept])
        np.testing.assert_array_equal(te.values, X[150:][:, kept])
        assert selector.column_weights_.sum() == pytest.approx(1.0)
        rows = selector.attention(X)
        np.testing.assert_allclose(rows.sum(axis=1), 1.0)

    def test_too_narrow(self):
        X = np.arange(10.0)[:, None]
        with pytest.raises(WidthTooSmall):
            attention_select(FeatureMatrix(X), None, np.arange(10) % 2)


class TestPlan:
    def test_schedules(self):
        levels = range(0, 11)
        assert [ell for ell in levels if CompressionPlan("none").fires_at(ell)] == []
        assert [ell for ell in levels if CompressionPlan("each").fires_at(ell)] == list(range(1, 11))
        assert [ell for ell in levels if CompressionPlan("periodic").fires_at(ell)] == [3, 6, 9]

    def test_invalid(self):
        with pytest.raises(ValueError):
            CompressionPlan("sometimes")
        with pytest.raises(ValueError):
            CompressionPlan("each", "pca")

    @pytest.mark.parametrize("method", ["sfe", "ae2", "ae3", "attention"])
    def test_dispatch_keeps_rows_and_shrinks(self, method):
        X, y = labelled(90, d=9)
        res = compress(method, FeatureMatrix(X[:60]), FeatureMatrix(X[60:]), y[:60], level=3, seed=0, n_classes=2)
        assert res.train.rows == 60 and res.test.rows == 30
        assert res.train.cols == res.test.cols < 9
