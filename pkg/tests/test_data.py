import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from recstack.data import (
    ColumnMeta,
    Dataset,
    FeatureMatrix,
    Task,
    load_csv,
    make_blobs,
    make_ring,
    stratified_folds,
)
from recstack.errors import (
    ClassTooSmall,
    DatasetError,
    MissingLabelColumn,
    SingleClassDataset,
    UnparseableCell,
)


def write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadCsv:
    def test_numeric_column_and_sorted_labels(self, tmp_path):
        path = write(tmp_path, "a,y\n1.5,yes\n2,no\n-3,yes\n")
        ds = load_csv(path, "y")
        assert ds.features.cols == 1
        assert ds.features.names == ["a"]
        np.testing.assert_array_equal(ds.features.values[:, 0], [1.5, 2.0, -3.0])
        np.testing.assert_array_equal(ds.labels, [1, 0, 1])
        assert ds.class_names == ("no", "yes")
        assert ds.task is Task.BINARY

    def test_categorical_one_hot_sorted(self, tmp_path):
        path = write(tmp_path, "colour,y\nred,0\ngreen,1\nred,0\n")
        ds = load_csv(path, "y")
        assert ds.features.names == ["colour=green", "colour=red"]
        np.testing.assert_array_equal(ds.features.values, [[0, 1], [1, 0], [0, 1]])

    def test_declared_categorical_numeric_codes(self, tmp_path):
        path = write(tmp_path, "code,x,y\n3,0.1,a\n1,0.2,b\n3,0.3,c\n")
        ds = load_csv(path, "y", categorical_columns=["code"])
        assert ds.features.names == ["code=1", "code=3", "x"]
        assert ds.task is Task.MULTICLASS
        assert ds.class_count == 3

    def test_numeric_labels_sort_numerically(self, tmp_path):
        path = write(tmp_path, "x,y\n0,10\n1,2\n2,10\n")
        ds = load_csv(path, "y")
        assert ds.class_names == ("2", "10")
        np.testing.assert_array_equal(ds.labels, [1, 0, 1])

    def test_single_class(self, tmp_path):
        path = write(tmp_path, "x,y\n1,a\n2,a\n")
        with pytest.raises(SingleClassDataset):
            load_csv(path, "y")

    def test_missing_label(self, tmp_path):
        path = write(tmp_path, "x,y\n1,a\n2,b\n")
        with pytest.raises(MissingLabelColumn):
            load_csv(path, "target")

    @pytest.mark.parametrize(
        "body",
        ["x,y\n1,a\n,b\n", "x,y\n1,a\nnan,b\n", "x,y\n1,a\ninf,b\n", "x,y\n1,a\n2\n"],
        ids=["empty", "nan", "inf", "ragged"],
    )
    def test_bad_cells_are_errors(self, tmp_path, body):
        with pytest.raises(UnparseableCell):
            load_csv(write(tmp_path, body), "y")

    def test_unknown_categorical(self, tmp_path):
        with pytest.raises(DatasetError):
            load_csv(write(tmp_path, "x,y\n1,a\n2,b\n"), "y", ["nope"])

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.sampled_from(["ant", "bee", "cat", "dog"]), min_size=2, max_size=30))
    def test_one_hot_round_trip(self, tmp_path_factory, cats):
        tmp = tmp_path_factory.mktemp("rt")
        rows = "\n".join(f"{c},{i % 2}" for i, c in enumerate(cats))
        path = write(tmp, f"animal,y\n{rows}\n")
        ds = load_csv(path, "y")
        levels = sorted(set(cats))
        recovered = [levels[k] for k in ds.features.values.argmax(axis=1)]
        assert recovered == cats
        assert np.all(np.isfinite(ds.features.values))


class TestDatasetInvariants:
    def test_label_coverage_enforced(self):
        fm = FeatureMatrix(np.zeros((3, 1)))
        with pytest.raises(DatasetError):
            Dataset(fm, np.array([0, 2, 2]), 3, Task.MULTICLASS)

    def test_task_consistency(self):
        fm = FeatureMatrix(np.zeros((2, 1)))
        with pytest.raises(DatasetError):
            Dataset(fm, np.array([0, 1]), 2, Task.MULTICLASS)

    def test_feature_matrix_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            FeatureMatrix(np.array([[1.0, np.nan]]))

    def test_column_meta_length(self):
        with pytest.raises(ValueError):
            FeatureMatrix(np.zeros((2, 2)), (ColumnMeta("a"),))

    def test_generators(self):
        ring = make_ring(100, seed=1)
        assert ring.features.rows == 100 and ring.class_count == 2
        blobs = make_blobs(90, n_classes=3, seed=1)
        assert np.bincount(blobs.labels).tolist() == [30, 30, 30]


class TestStratifiedFolds:
    def test_perfect_split(self):
        plan = stratified_folds([0] * 5 + [1] * 5, 5, seed=0)
        labels = np.array([0] * 5 + [1] * 5)
        for f in range(5):
            members = labels[plan.assignments == f]
            assert sorted(members.tolist()) == [0, 1]

    def test_class_too_small(self):
        with pytest.raises(ClassTooSmall):
            stratified_folds([0, 1], 5, seed=0)

    def test_sixty_forty(self):
        labels = np.array([0] * 60 + [1] * 40)
        plan = stratified_folds(labels, 5, seed=3)
        for f in range(5):
            counts = np.bincount(labels[plan.assignments == f], minlength=2)
            assert counts.tolist() == [12, 8]

    def test_deterministic_and_seed_sensitive(self):
        labels = np.arange(40) % 3
        a = stratified_folds(labels, 4, seed=11).assignments
        b = stratified_folds(labels, 4, seed=11).assignments
        c = stratified_folds(labels, 4, seed=12).assignments
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    @settings(max_examples=60, deadline=None)
    @given(
        counts=st.lists(st.integers(min_value=5, max_value=40), min_size=2, max_size=5),
        k=st.integers(min_value=2, max_value=5),
        seed=st.integers(min_value=0, max_value=2**31),
    )
    def test_stratification_bound(self, counts, k, seed):
        labels = np.repeat(np.arange(len(counts)), counts)
        plan = stratified_folds(labels, k, seed)
        sizes = np.bincount(plan.assignments, minlength=k)
        assert np.all(sizes > 0)
        for f in range(k):
            in_fold = labels[plan.assignments == f]
            per_class = np.bincount(in_fold, minlength=len(counts))
            expected = np.array(counts) / k
            assert np.all(np.abs(per_class - expected) < 1.0)
        train, test = plan.split(0)
        assert set(train).isdisjoint(test)
        assert len(train) + len(test) == labels.size
