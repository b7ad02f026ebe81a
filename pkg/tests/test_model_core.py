import io
import math

import numpy as np
import pytest

from models.errors import DataParseError, DegenerateEstimateError, DimensionMismatchError
from models.model_core import (
    Dataset,
    RngSeed,
    Theta,
    classify,
    linear_index,
    load_csv,
    rescaled_slope,
    write_csv,
)


def _csv(text: str) -> io.BytesIO:
    return io.BytesIO(text.encode("utf-8"))


class TestLoadCsv:
    def test_direct_mapping(self):
        data = load_csv(_csv("y,x1\n1,2.0\n-1,-2.0\n"))
        np.testing.assert_array_equal(data.labels, [1.0, -1.0])
        np.testing.assert_array_equal(data.covariates, [[2.0], [-2.0]])
        assert data.n == 2 and data.m == 1
        assert data.names == ("x1",)

    def test_zero_one_alphabet(self):
        data = load_csv(_csv("y,x1\n1,1.5\n0,-0.5\n"))
        np.testing.assert_array_equal(data.labels, [1.0, -1.0])

    def test_non_numeric_cell_names_row_and_column(self):
        with pytest.raises(DataParseError) as excinfo:
            load_csv(_csv("y,x1\n1,a\n"))
        assert excinfo.value.row == 1
        assert excinfo.value.column == "x1"

    def test_missing_value(self):
        with pytest.raises(DataParseError) as excinfo:
            load_csv(_csv("y,x1,x2\n1,2.0,3.0\n-1,,1.0\n"))
        assert (excinfo.value.row, excinfo.value.column) == (2, "x1")
        assert "missing" in str(excinfo.value)

    def test_mixed_label_alphabets(self):
        with pytest.raises(DataParseError) as excinfo:
            load_csv(_csv("y,x1\n1,0.0\n0,1.0\n-1,2.0\n"))
        assert excinfo.value.column == "y"

    def test_label_outside_alphabet(self):
        with pytest.raises(DataParseError) as excinfo:
            load_csv(_csv("y,x1\n2,0.0\n-1,1.0\n"))
        assert excinfo.value.row == 1

    def test_fewer_than_two_rows(self):
        with pytest.raises(DataParseError):
            load_csv(_csv("y,x1\n1,0.5\n"))

    def test_first_column_must_be_y(self):
        with pytest.raises(DataParseError):
            load_csv(_csv("label,x1\n1,0.5\n-1,0.3\n"))

    def test_non_finite_value(self):
        with pytest.raises(DataParseError) as excinfo:
            load_csv(_csv("y,x1\n1,inf\n-1,0.3\n"))
        assert excinfo.value.column == "x1"

    def test_column_order_preserved(self):
        data = load_csv(_csv("y,b,a\n1,1,2\n-1,3,4\n"))
        assert data.names == ("b", "a")
        np.testing.assert_array_equal(data.covariates[:, 0], [1.0, 3.0])

    def test_round_trip_is_bit_exact(self, tmp_path):
        rng = np.random.default_rng(3)
        original = Dataset(labels=np.where(rng.random(40) < 0.4, 1.0, -1.0),
                           covariates=rng.standard_normal((40, 3)) * 1e3)
        path = tmp_path / "sample.csv"
        write_csv(original, path)
        reloaded = load_csv(path)
        np.testing.assert_array_equal(reloaded.labels, original.labels)
        assert np.array_equal(reloaded.covariates, original.covariates)
        assert reloaded.names == original.names


class TestDataset:
    def test_one_class_dataset_is_representable(self):
        data = Dataset(labels=[1, 1, 1], covariates=[[0.0], [1.0], [2.0]])
        assert not data.has_both_classes()

    @pytest.mark.parametrize("labels", [[1, 0], [1, 2], [1, -0.5]])
    def test_rejects_bad_labels(self, labels):
        with pytest.raises(DataParseError):
            Dataset(labels=labels, covariates=[[0.0], [1.0]])

    def test_rejects_non_finite_covariates(self):
        with pytest.raises(DataParseError):
            Dataset(labels=[1, -1], covariates=[[np.nan], [1.0]])

    def test_rejects_row_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            Dataset(labels=[1, -1, 1], covariates=[[0.0], [1.0]])

    def test_arrays_are_read_only(self, two_point):
        with pytest.raises(ValueError):
            two_point.labels[0] = 1.0

    def test_design_matrix_prepends_ones(self, six_point):
        design = six_point.design_matrix()
        assert design.shape == (6, 3)
        np.testing.assert_array_equal(design[:, 0], np.ones(6))


class TestClassifier:
    @pytest.mark.parametrize(
        "alpha, beta, x, expected",
        [
            (0.0, [1.0], [0.0], 1),
            (1.0, [1.0, 1.0], [-3.0, 0.5], -1),
            (0.5, [0.0, 1.0], [9.0, -0.5], 1),
        ],
    )
    def test_classify(self, alpha, beta, x, expected):
        assert classify(Theta(alpha, beta), np.array(x)) == expected

    @pytest.mark.parametrize(
        "alpha, beta, x, expected",
        [
            (0.0, [0.0], [5.0], 0.0),
            (1.0, [2.0], [3.0], 7.0),
            (-1.0, [1.0, 1.0], [0.5, 0.5], 0.0),
        ],
    )
    def test_linear_index(self, alpha, beta, x, expected):
        assert linear_index(Theta(alpha, beta), np.array(x)) == expected

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            classify(Theta(0.0, [1.0, 1.0]), np.array([1.0]))

    def test_scale_invariance_and_sign_link(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            theta = Theta(rng.normal(), rng.normal(size=3))
            x = rng.normal(size=(20, 3))
            labels = classify(theta, x)
            np.testing.assert_array_equal(labels, classify(theta.scaled(rng.uniform(0.1, 10.0)), x))
            np.testing.assert_array_equal(labels == 1, linear_index(theta, x) >= 0)


class TestRescaledSlope:
    def test_equal_components(self):
        assert rescaled_slope(Theta(0.0, [1 / math.sqrt(2), 1 / math.sqrt(2)]), 0, 1) == 1.0

    def test_zero_numerator(self):
        assert rescaled_slope(Theta(0.0, [0.0, 1.0]), 0, 1) == 0.0

    def test_zero_denominator(self):
        with pytest.raises(DegenerateEstimateError):
            rescaled_slope(Theta(0.0, [0.3, 0.0]), 0, 1)


class TestRngSeed:
    def test_stream_is_pure_function_of_seed_and_index(self):
        first = RngSeed(7, 3).generator().standard_normal(5)
        second = RngSeed(7, 3).generator().standard_normal(5)
        np.testing.assert_array_equal(first, second)

    def test_distinct_indices_give_distinct_streams(self):
        draws = [RngSeed(7, k).generator().standard_normal(1000) for k in range(4)]
        for i in range(4):
            for j in range(i + 1, 4):
                assert not np.array_equal(draws[i], draws[j])
                assert abs(np.corrcoef(draws[i], draws[j])[0, 1]) < 0.15

    def test_rejects_negative_seed(self):
        with pytest.raises(ValueError):
            RngSeed(-1, 0)
