"""Dataset registry and bundled generator tests."""

import numpy as np
import pytest

from bitdiff.datasets import TOY_CELLS, TOY_JOINTS, get_preset, make_binary_toy, make_travel_like


class TestRegistry:
    def test_travel_preset_hyperparameters(self):
        preset = get_preset("travel")
        assert (preset.lr_max_iter, preset.dt_max_depth, preset.rf_max_depth, preset.rf_n_estimators) == (
            100, 6, 12, 75,
        )
        assert preset.target_column == "Target"
        assert preset.task == "classification"

    def test_all_benchmark_rows_present(self):
        expected = {
            "travel": (100, 6, 12, 75),
            "sick": (200, 10, 12, 90),
            "heloc": (500, 6, 12, 78),
            "adult": (1000, 8, 12, 85),
            "diabetes": (500, 10, 20, 120),
        }
        for name, row in expected.items():
            preset = get_preset(name)
            assert (preset.lr_max_iter, preset.dt_max_depth, preset.rf_max_depth, preset.rf_n_estimators) == row
        california = get_preset("california")
        assert california.task == "regression"
        assert california.lr_max_iter is None
        assert (california.dt_max_depth, california.rf_max_depth, california.rf_n_estimators) == (10, 12, 85)

    def test_unknown_preset(self):
        with pytest.raises(ValueError, match="unknown dataset preset"):
            get_preset("nope")


class TestTravelLike:
    def test_shape_and_columns(self):
        frame = make_travel_like()
        assert len(frame) == 954
        assert list(frame.columns) == [
            "Age", "FrequentFlyer", "AnnualIncomeClass", "ServicesOpted",
            "AccountSyncedToSocialMedia", "BookedHotelOrNot", "Target",
        ]

    def test_deterministic(self):
        a = make_travel_like(seed=11)
        b = make_travel_like(seed=11)
        assert a.equals(b)

    def test_churn_rate_near_quarter(self):
        frame = make_travel_like()
        rate = (frame["Target"] == "1").mean()
        assert 0.18 <= rate <= 0.30

    def test_value_domains(self):
        frame = make_travel_like()
        assert frame["Age"].between(27, 38).all()
        assert frame["ServicesOpted"].between(1, 6).all()
        assert set(frame["FrequentFlyer"]) == {"No", "No Record", "Yes"}
        assert set(frame["AnnualIncomeClass"]) == {"Low Income", "Middle Income", "High Income"}


class TestBinaryToy:
    def test_quota_matches_ground_truth(self):
        frame = make_binary_toy(500, seed=11)
        assert len(frame) == 500
        for cls, joint in TOY_JOINTS.items():
            sub = frame[frame["label"] == cls]
            emp = np.array([((sub.f1 == a) & (sub.f2 == b)).mean() for a, b in TOY_CELLS])
            assert 0.5 * np.abs(emp - joint).sum() < 0.01

    def test_balanced_classes(self):
        frame = make_binary_toy(500, seed=11)
        assert (frame["label"] == "0").sum() == 250

    def test_joints_are_distributions(self):
        for joint in TOY_JOINTS.values():
            assert joint.min() > 0
            assert joint.sum() == pytest.approx(1.0)
