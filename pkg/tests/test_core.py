import numpy as np
import pytest
from hypothesis import given, strategies as st

from salp_ensemble.core import (
    Bounds,
    CurveSeries,
    InvalidConfig,
    NegativeScore,
    NonFinite,
    RowSumOutOfTolerance,
    SsaConfig,
    class_names,
    make_labels,
    make_weights,
    validate_prediction_matrix,
)


class TestValidatePredictionMatrix:
    def test_valid_rows(self):
        m = validate_prediction_matrix([[0.7, 0.3], [0.5, 0.5]])
        assert m.n_samples == 2 and m.n_classes == 2

    def test_row_sum_out_of_tolerance(self):
        with pytest.raises(RowSumOutOfTolerance) as err:
            validate_prediction_matrix([[0.7, 0.4]])
        assert err.value.row == 0
        assert err.value.row_sum == pytest.approx(1.1)

    def test_negative_score(self):
        with pytest.raises(NegativeScore) as err:
            validate_prediction_matrix([[-0.1, 1.1]])
        assert (err.value.row, err.value.col) == (0, 0)

    def test_non_finite(self):
        with pytest.raises(NonFinite) as err:
            validate_prediction_matrix([[np.nan, 1.0], [0.5, 0.5]])
        assert (err.value.row, err.value.col) == (0, 0)

    def test_shape_guards(self):
        with pytest.raises(InvalidConfig):
            validate_prediction_matrix([[1.0]])  # K must be >= 2
        with pytest.raises(InvalidConfig):
            validate_prediction_matrix(np.empty((0, 3)))

    def test_within_tolerance_accepted(self):
        # 6-decimal serialization error must pass the 1e-4 gate
        m = validate_prediction_matrix([[0.333333, 0.333333, 0.333333]])
        assert m.n_classes == 3

    @given(st.integers(1, 20), st.integers(2, 6), st.integers(0, 10_000))
    def test_revalidation_idempotent(self, s, k, seed):
        rng = np.random.default_rng(seed)
        raw = rng.random((s, k)) + 1e-9
        raw /= raw.sum(axis=1, keepdims=True)
        once = validate_prediction_matrix(raw)
        twice = validate_prediction_matrix(once.data)
        assert np.array_equal(once.data, twice.data)

    def test_matrix_is_immutable(self):
        m = validate_prediction_matrix([[0.5, 0.5]])
        with pytest.raises(ValueError):
            m.data[0, 0] = 0.9


class TestLabelsAndWeights:
    def test_labels(self):
        lv = make_labels([0, 4, 2], k=5)
        assert len(lv) == 3

    def test_label_out_of_range(self):
        with pytest.raises(InvalidConfig):
            make_labels([0, 5], k=5)
        with pytest.raises(InvalidConfig):
            make_labels([-1, 0])

    def test_weights_bounds(self):
        w = make_weights([0.0, 0.5, 1.0])
        assert len(w) == 3
        with pytest.raises(InvalidConfig):
            make_weights([1.2, 0.0, 0.0])

    def test_weight_normalization(self):
        w = make_weights([0.2, 0.2])
        assert np.allclose(w.normalized(), [0.5, 0.5])
        zero = make_weights([0.0, 0.0])
        assert np.allclose(zero.normalized(), [0.5, 0.5])


class TestBoundsAndConfig:
    def test_unit_bounds(self):
        b = Bounds.unit(3)
        assert b.dimensions == 3
        assert b.contains(np.array([0.0, 0.5, 1.0]))
        assert np.allclose(b.clamp(np.array([-1.0, 0.5, 2.0])), [0.0, 0.5, 1.0])

    def test_degenerate_bounds_rejected(self):
        with pytest.raises(InvalidConfig):
            Bounds(np.array([0.0, 1.0]), np.array([1.0, 1.0]))

    def test_config_defaults_match_published_table(self):
        cfg = SsaConfig()
        assert cfg.num_salps == 100
        assert cfg.max_iterations == 100
        assert cfg.dimensions == 3
        assert np.allclose(cfg.bounds.lower, 0.0) and np.allclose(cfg.bounds.upper, 1.0)

    def test_config_guards(self):
        with pytest.raises(InvalidConfig):
            SsaConfig(num_salps=1)
        with pytest.raises(InvalidConfig):
            SsaConfig(dimensions=0)
        with pytest.raises(InvalidConfig):
            SsaConfig(dimensions=2, bounds=Bounds.unit(3))


class TestCurveSeries:
    def test_accepts_valid(self):
        c = CurveSeries(np.array([[0.0, 0.0], [0.5, 0.7], [1.0, 1.0]]), 0.85)
        assert c.summary == 0.85

    def test_rejects_decreasing_x(self):
        with pytest.raises(InvalidConfig):
            CurveSeries(np.array([[0.5, 0.0], [0.2, 1.0]]), 0.5)

    def test_rejects_out_of_square(self):
        with pytest.raises(InvalidConfig):
            CurveSeries(np.array([[0.0, 1.5]]), 0.5)
        with pytest.raises(InvalidConfig):
            CurveSeries(np.array([[0.0, 1.0]]), 1.5)


def test_class_names():
    assert class_names(5) == ("Normal", "Mild", "Moderate", "Severe", "Proliferative")
    assert class_names(3) == ("class_0", "class_1", "class_2")
