"""sklearn-style facade over the full pipeline: fit a table, sample synthetic rows."""

from __future__ import annotations

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .checkpoint import Checkpoint
from .sampling import SampleConfig, sample
from .schema import TASK_CLASSIFICATION, infer_schema
from .training import TrainConfig, fit as train_fit


class BinaryDiffusionSynthesizer(BaseEstimator):
    """Tabular synthesizer: bit-codec + XOR-noise denoising model, one estimator.

    ``fit`` takes the raw table (target column included), infers the reversible
    schema, and trains the denoiser; ``sample`` generates labeled synthetic
    rows. All constructor arguments are plain hyperparameters so the estimator
    composes with sklearn tooling (get_params/set_params/clone).
    """

    def __init__(
        self,
        target_column=None,
        task=TASK_CLASSIFICATION,
        type_hints=None,
        learning_rate=1e-4,
        weight_decay=0.0,
        batch_size=256,
        train_steps=20_000,
        ema_decay=0.995,
        ema_update_every=10,
        cfg_drop_prob=0.1,
        timesteps=1000,
        schedule_shape="linear",
        hidden_dim=256,
        n_steps=5,
        guidance_scale=5.0,
        threshold=0.5,
        use_ema=True,
        seed=0,
    ):
        self.target_column = target_column
        self.task = task
        self.type_hints = type_hints
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.batch_size = batch_size
        self.train_steps = train_steps
        self.ema_decay = ema_decay
        self.ema_update_every = ema_update_every
        self.cfg_drop_prob = cfg_drop_prob
        self.timesteps = timesteps
        self.schedule_shape = schedule_shape
        self.hidden_dim = hidden_dim
        self.n_steps = n_steps
        self.guidance_scale = guidance_scale
        self.threshold = threshold
        self.use_ema = use_ema
        self.seed = seed

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            weight_decay=self.weight_decay,
            batch_size=self.batch_size,
            train_steps=self.train_steps,
            ema_decay=self.ema_decay,
            ema_update_every=self.ema_update_every,
            cfg_drop_prob=self.cfg_drop_prob,
            T=self.timesteps,
            schedule_shape=self.schedule_shape,
            hidden_dim=self.hidden_dim,
            seed=self.seed,
        )

    def _sample_config(self, seed=None) -> SampleConfig:
        return SampleConfig(
            n_steps=self.n_steps,
            guidance_scale=self.guidance_scale,
            threshold=self.threshold,
            use_ema=self.use_ema,
            seed=self.seed if seed is None else seed,
        )

    def fit(self, X: pd.DataFrame, y=None):
        if self.target_column is None:
            raise ValueError("target_column is required")
        frame = X if y is None else X.assign(**{self.target_column: y})
        schema = infer_schema(frame, self.target_column, task=self.task, type_hints=self.type_hints)
        self.checkpoint_ = train_fit(frame, schema, self._train_config())
        return self

    def _require_fit(self) -> Checkpoint:
        if not hasattr(self, "checkpoint_"):
            raise NotFittedError("BinaryDiffusionSynthesizer is not fitted; call fit first")
        return self.checkpoint_

    @property
    def schema_(self):
        return self._require_fit().schema

    def sample(self, n_rows: int, y, seed=None, rng: np.random.Generator | None = None) -> pd.DataFrame:
        """Generate ``n_rows`` records conditioned on label ``y``."""
        return sample(self._require_fit(), y, n_rows, config=self._sample_config(seed), rng=rng)

    def save(self, path) -> None:
        self._require_fit().save(path)

    @classmethod
    def from_checkpoint(cls, path) -> "BinaryDiffusionSynthesizer":
        """Rebuild a sampling-ready estimator from a saved checkpoint."""
        checkpoint = Checkpoint.load(path)
        cfg = checkpoint.train_config
        est = cls(
            target_column=checkpoint.schema.target.name,
            task=checkpoint.schema.target.task,
            learning_rate=cfg.get("learning_rate", 1e-4),
            batch_size=cfg.get("batch_size", 256),
            train_steps=cfg.get("train_steps", 20_000),
            timesteps=checkpoint.schedule.T,
            schedule_shape=checkpoint.schedule.shape,
            hidden_dim=cfg.get("hidden_dim", 256),
            seed=cfg.get("seed", 0),
        )
        est.checkpoint_ = checkpoint
        return est
