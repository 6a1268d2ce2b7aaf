"""Estimator facade tests: sklearn-protocol compliance and fit/sample round trip."""

import numpy as np
import pandas as pd
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from bitdiff.synthesizer import BinaryDiffusionSynthesizer


def small_frame(n=80, seed=0):
    rng = np.random.default_rng(seed)
    label = rng.choice(["no", "yes"], n)
    return pd.DataFrame(
        {
            "f": np.where(label == "yes", rng.uniform(0.5, 1, n), rng.uniform(0, 0.5, n)).round(3),
            "g": rng.choice(["u", "v"], n),
            "churn": label,
        }
    )


def small_estimator(**overrides):
    params = dict(
        target_column="churn",
        train_steps=120,
        batch_size=32,
        hidden_dim=16,
        timesteps=100,
        n_steps=2,
        seed=0,
    )
    params.update(overrides)
    return BinaryDiffusionSynthesizer(**params)


class TestSklearnProtocol:
    def test_get_params_set_params(self):
        est = small_estimator()
        params = est.get_params()
        assert params["target_column"] == "churn"
        est.set_params(guidance_scale=2.0)
        assert est.get_params()["guidance_scale"] == 2.0

    def test_clone(self):
        est = small_estimator()
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            small_estimator().sample(3, "yes")

    def test_missing_target_column(self):
        with pytest.raises(ValueError, match="target_column"):
            BinaryDiffusionSynthesizer().fit(small_frame())


class TestFitSample:
    def test_fit_returns_self_and_samples(self):
        est = small_estimator()
        frame = small_frame()
        assert est.fit(frame) is est
        out = est.sample(5, "yes")
        assert len(out) == 5
        assert list(out.columns) == ["f", "g", "churn"]
        assert (out["churn"] == "yes").all()
        assert out["g"].isin(["u", "v"]).all()

    def test_fit_with_separate_y(self):
        frame = small_frame()
        est = small_estimator().fit(frame.drop(columns=["churn"]), frame["churn"])
        assert est.schema_.target.name == "churn"

    def test_save_load_round_trip(self, tmp_path):
        frame = small_frame()
        est = small_estimator().fit(frame)
        path = tmp_path / "syn.bdck"
        est.save(path)
        restored = BinaryDiffusionSynthesizer.from_checkpoint(path)
        a = est.sample(4, "no", seed=3)
        b = restored.sample(4, "no", seed=3)
        pd.testing.assert_frame_equal(a, b)

    def test_sample_seed_controls_output(self):
        est = small_estimator().fit(small_frame())
        a = est.sample(4, "yes", seed=1)
        b = est.sample(4, "yes", seed=2)
        assert not a.drop(columns="churn").equals(b.drop(columns="churn"))


class TestRegressionTask:
    def test_fit_sample_eval_round(self):
        rng = np.random.default_rng(3)
        n = 80
        kind = rng.choice(["u", "v"], n)
        target = np.where(kind == "u", rng.uniform(0, 0.4, n), rng.uniform(0.6, 1.0, n))
        frame = pd.DataFrame({"kind": kind, "level": rng.uniform(0, 1, n).round(3), "y": target.round(4)})
        est = small_estimator(target_column="y", task="regression").fit(frame)
        out = est.sample(6, 0.8)
        assert (out["y"] == 0.8).all()
        assert out["kind"].isin(["u", "v"]).all()

        from bitdiff.evaluation import EvalConfig, ml_efficiency, split_dataset
        from bitdiff.sampling import SampleConfig

        train, test = split_dataset(frame, 0.8, 0)
        report = ml_efficiency(
            est.checkpoint_, train, test,
            EvalConfig(n_synthetic_sets=2, seed=0, sample=SampleConfig(n_steps=2, seed=0)),
        )
        assert report.metric == "mse"
        assert report.direction == "lower"
        for entry in report.models.values():
            assert entry["mean"] >= 0.0
