"""Dataset parsing, standardization and fold-assignment behavior."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svmtune import (
    DataError,
    Dataset,
    FoldAssignment,
    dump_libsvm,
    kfold_split,
    parse_csv,
    parse_libsvm,
    standardize,
)

from synth import two_blobs


class TestParseLibsvm:
    def test_basic_sparse_lines(self):
        d = parse_libsvm("+1 1:2.0 3:1.0\n-1 2:0.5\n")
        assert d.n_samples == 2
        assert d.n_features == 3
        np.testing.assert_array_equal(d.features, [[2.0, 0.0, 1.0], [0.0, 0.5, 0.0]])
        np.testing.assert_array_equal(d.labels, [1, -1])

    def test_zero_label_maps_to_negative(self):
        d = parse_libsvm("1 1:1\n0 1:-1\n")
        np.testing.assert_array_equal(d.labels, [1, -1])

    def test_single_class_rejected(self):
        with pytest.raises(DataError, match="one class"):
            parse_libsvm("+1 1:1\n+1 2:1\n")

    def test_empty_input_rejected(self):
        with pytest.raises(DataError, match="empty"):
            parse_libsvm("")

    def test_bad_label_reports_line(self):
        with pytest.raises(DataError, match="line 2"):
            parse_libsvm("+1 1:1\n+3 1:2\n")

    def test_malformed_entry_reports_line(self):
        with pytest.raises(DataError, match="line 1"):
            parse_libsvm("+1 1:x\n-1 1:1\n")

    def test_non_increasing_indices_rejected(self):
        with pytest.raises(DataError, match="strictly increasing"):
            parse_libsvm("+1 2:1 2:2\n-1 1:1\n")

    def test_accepts_bytes_and_crlf(self):
        d = parse_libsvm(b"+1 1:1\r\n-1 1:-1\r\n")
        assert d.n_samples == 2

    def test_roundtrip_through_dump(self):
        text = "+1 1:2.0 3:1.0\n-1 2:0.5\n0 1:-3.25 2:0.125 3:7.5\n"
        first = parse_libsvm(text)
        second = parse_libsvm(dump_libsvm(first))
        np.testing.assert_array_equal(first.features, second.features)
        np.testing.assert_array_equal(first.labels, second.labels)

    @settings(deadline=None, max_examples=50)
    @given(st.data())
    def test_roundtrip_random_datasets(self, data):
        n = data.draw(st.integers(2, 12))
        width = data.draw(st.integers(1, 6))
        cells = data.draw(
            st.lists(
                st.lists(
                    st.floats(-100, 100, allow_nan=False).map(lambda v: round(v, 3)),
                    min_size=width,
                    max_size=width,
                ),
                min_size=n,
                max_size=n,
            )
        )
        labels = [-1, 1] + data.draw(
            st.lists(st.sampled_from([-1, 1]), min_size=n - 2, max_size=n - 2)
        )
        d = Dataset(np.array(cells), np.array(labels))
        again = parse_libsvm(dump_libsvm(d))
        np.testing.assert_array_equal(d.features, again.features)
        np.testing.assert_array_equal(d.labels, again.labels)


class TestParseCsv:
    def test_basic_table(self):
        d = parse_csv("a,b,y\n1,2,1\n3,4,0\n", "y")
        np.testing.assert_array_equal(d.features, [[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(d.labels, [1, -1])

    def test_label_column_position_respected(self):
        d = parse_csv("y,a,b\n1,1,2\n-1,3,4\n", "y")
        np.testing.assert_array_equal(d.features, [[1.0, 2.0], [3.0, 4.0]])

    def test_unknown_label_column(self):
        with pytest.raises(DataError, match="unknown label column"):
            parse_csv("a,b,y\n1,2,1\n", "z")

    def test_non_numeric_cell_names_row_and_column(self):
        with pytest.raises(DataError, match=r"row 2, column b"):
            parse_csv("a,b,y\n1,2,1\n3,abc,0\n", "y")

    def test_missing_header(self):
        with pytest.raises(DataError):
            parse_csv("", "y")

    def test_single_class_rejected(self):
        with pytest.raises(DataError, match="one class"):
            parse_csv("a,y\n1,1\n2,1\n", "y")


class TestStandardize:
    def test_two_point_column(self):
        d = Dataset(np.array([[0.0], [2.0]]), np.array([-1, 1]))
        scaled, stats = standardize(d)
        np.testing.assert_allclose(stats.mean, [1.0])
        np.testing.assert_allclose(stats.scale, [1.0])
        np.testing.assert_array_equal(scaled.features, [[-1.0], [1.0]])

    def test_constant_column_centered_only(self):
        d = Dataset(np.array([[5.0, 0.0], [5.0, 2.0]]), np.array([-1, 1]))
        scaled, stats = standardize(d)
        np.testing.assert_array_equal(scaled.features[:, 0], [0.0, 0.0])
        assert stats.scale[0] == 1.0

    def test_idempotent_on_unit_stats(self):
        d = two_blobs(n=40, seed=9)
        once, _ = standardize(d)
        twice, _ = standardize(once)
        np.testing.assert_allclose(twice.features, once.features, atol=1e-12)

    def test_output_columns_have_unit_stats(self):
        d = two_blobs(n=80, seed=5)
        scaled, _ = standardize(d)
        np.testing.assert_allclose(scaled.features.mean(axis=0), 0.0, atol=1e-9)
        np.testing.assert_allclose(
            np.sqrt(np.mean(scaled.features**2, axis=0)), 1.0, atol=1e-9
        )

    def test_stats_reproduce_transform(self):
        d = two_blobs(n=30, seed=11)
        scaled, stats = standardize(d)
        np.testing.assert_allclose(stats.apply(d.features), scaled.features)


class TestKfoldSplit:
    def test_balanced_ten_samples(self):
        d = two_blobs(n=10, seed=0)
        folds = kfold_split(d, k=5, seed=17)
        for fold in range(5):
            members = folds.test_indices(fold)
            assert members.size == 2
            assert set(d.labels[members]) == {-1, 1}

    def test_k_exceeding_class_count(self):
        d = two_blobs(n=10, seed=0)
        with pytest.raises(DataError, match="smaller class count"):
            kfold_split(d, k=11, seed=0)

    def test_k_below_two(self):
        d = two_blobs(n=10, seed=0)
        with pytest.raises(DataError, match=">= 2"):
            kfold_split(d, k=1, seed=0)

    def test_deterministic(self):
        d = two_blobs(n=50, seed=2)
        a = kfold_split(d, k=5, seed=99)
        b = kfold_split(d, k=5, seed=99)
        np.testing.assert_array_equal(a.fold_of, b.fold_of)

    def test_seed_changes_assignment(self):
        d = two_blobs(n=50, seed=2)
        a = kfold_split(d, k=5, seed=1)
        b = kfold_split(d, k=5, seed=2)
        assert not np.array_equal(a.fold_of, b.fold_of)

    @pytest.mark.parametrize("n,k,seed", [(30, 3, 0), (47, 5, 1), (100, 7, 2)])
    def test_partition_and_balance(self, n, k, seed):
        d = two_blobs(n=n, seed=seed)
        folds = kfold_split(d, k=k, seed=seed)
        sizes = np.bincount(folds.fold_of, minlength=k)
        assert sizes.sum() == n
        assert sizes.max() - sizes.min() <= 1
        for fold in range(k):
            members = folds.test_indices(fold)
            for cls in (-1, 1):
                count = int(np.sum(d.labels[members] == cls))
                proportional = members.size * np.mean(d.labels == cls)
                assert abs(count - round(proportional)) <= 1

    def test_fold_assignment_validation(self):
        with pytest.raises(DataError):
            FoldAssignment(k=1, fold_of=np.array([0, 0]))
        with pytest.raises(DataError):
            FoldAssignment(k=2, fold_of=np.array([0, 2]))


class TestDatasetInvariants:
    def test_rejects_nan_features(self):
        with pytest.raises(DataError, match="NaN or infinity"):
            Dataset(np.array([[np.nan], [1.0]]), np.array([-1, 1]))

    def test_rejects_bad_labels(self):
        with pytest.raises(DataError, match="labels"):
            Dataset(np.array([[1.0], [2.0]]), np.array([0, 1]))

    def test_rejects_single_class(self):
        with pytest.raises(DataError, match="one class"):
            Dataset(np.array([[1.0], [2.0]]), np.array([1, 1]))

    def test_features_are_immutable(self):
        d = Dataset(np.array([[1.0], [2.0]]), np.array([-1, 1]))
        with pytest.raises(ValueError):
            d.features[0, 0] = 9.0

    def test_sample_accessor(self):
        d = Dataset(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([-1, 1]))
        s = d.sample(1)
        assert s.label == 1
        np.testing.assert_array_equal(s.features, [3.0, 4.0])
