"""ML-efficiency evaluation: train standard predictors on synthetic rows, score on real ones.

Protocol: the real table is split 80/20 (stratified for classification). The
generator, trained on the real training split only, produces several synthetic
training sets of the same size, with labels drawn from the real training
split's empirical label distribution. Logistic/linear regression, a decision
tree, and a random forest are fitted on each synthetic set and scored on the
real test split; scores are reported as mean and standard deviation across
sets, next to a reference fit on the real training split through the identical
pipeline.

Feature preprocessing is fixed inside the harness so real and synthetic paths
are identical: categoricals are one-hot encoded against the schema's category
list and the linear model additionally sees standardized continuous columns.
Multi-class targets use multinomial logistic regression.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from sklearn.ensemble import RandomForestClassifier, RandomForestRegressor
from sklearn.linear_model import LinearRegression, LogisticRegression
from sklearn.metrics import accuracy_score, mean_squared_error
from sklearn.tree import DecisionTreeClassifier, DecisionTreeRegressor

from .checkpoint import Checkpoint
from .codec import decode_table, encode_condition_column, null_condition
from .sampling import SampleConfig, sample_bits
from .schema import KIND_CATEGORICAL, TASK_CLASSIFICATION, TableSchema

DOWNSTREAM_MODELS = ("LR", "DT", "RF")


@dataclass
class EvalConfig:
    train_fraction: float = 0.8
    n_synthetic_sets: int = 5
    # Downstream hyperparameters; defaults are the Travel benchmark settings.
    lr_max_iter: int = 100
    dt_max_depth: int = 6
    rf_max_depth: int = 12
    rf_n_estimators: int = 75
    seed: int = 0
    sample: SampleConfig = field(default_factory=SampleConfig)

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")
        if self.n_synthetic_sets < 1:
            raise ValueError("n_synthetic_sets must be >= 1")


@dataclass
class EvalReport:
    dataset: str
    task: str
    metric: str
    direction: str
    n_synthetic_sets: int
    label_sampling: str
    models: dict[str, dict]
    split_info: dict
    checkpoint_hash: str | None
    config: dict

    def to_json_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "task": self.task,
            "metric": self.metric,
            "direction": self.direction,
            "n_synthetic_sets": self.n_synthetic_sets,
            "label_sampling": self.label_sampling,
            "models": self.models,
            "split": self.split_info,
            "checkpoint_sha256": self.checkpoint_hash,
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    def to_text(self) -> str:
        arrow = "(higher is better)" if self.direction == "higher" else "(lower is better)"
        lines = [
            f"ML efficiency on {self.dataset}: {self.metric} {arrow}, "
            f"mean +/- std over {self.n_synthetic_sets} synthetic sets",
            f"{'model':<6} {'synthetic':>18} {'real-trained':>14}",
        ]
        for name in DOWNSTREAM_MODELS:
            entry = self.models[name]
            lines.append(
                f"{name:<6} {entry['mean']:>11.2f} +/- {entry['std']:<5.2f} {entry['reference']:>12.2f}"
            )
        return "\n".join(lines)


def _largest_remainder_counts(proportions: np.ndarray, total: int) -> np.ndarray:
    """Integer allocation matching ``proportions`` as closely as possible, summing to total."""
    raw = proportions * total
    counts = np.floor(raw).astype(int)
    short = total - counts.sum()
    if short > 0:
        order = np.argsort(-(raw - counts))
        counts[order[:short]] += 1
    return counts


def split_dataset(
    table: pd.DataFrame, fraction: float, seed: int, stratify_column: str | None = None
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Deterministic shuffled split; stratified per class when a column is given."""
    n = len(table)
    if n < 10:
        raise ValueError("need at least 10 rows to split")
    rng = np.random.default_rng(seed)
    n_train_total = round(n * fraction)
    if stratify_column is None:
        order = rng.permutation(n)
        train_idx, test_idx = order[:n_train_total], order[n_train_total:]
    else:
        labels = table[stratify_column].astype(str).to_numpy()
        classes, class_of = np.unique(labels, return_inverse=True)
        counts = np.bincount(class_of, minlength=len(classes))
        train_counts = _largest_remainder_counts(counts / n, n_train_total)
        train_parts, test_parts = [], []
        for k in range(len(classes)):
            members = np.flatnonzero(class_of == k)
            members = members[rng.permutation(len(members))]
            train_parts.append(members[: train_counts[k]])
            test_parts.append(members[train_counts[k] :])
        train_idx = np.concatenate(train_parts)
        test_idx = np.concatenate(test_parts)
        train_idx = train_idx[rng.permutation(len(train_idx))]
        test_idx = test_idx[rng.permutation(len(test_idx))]
        missing = [classes[k] for k in range(len(classes)) if train_counts[k] == 0]
        if missing:
            raise ValueError(f"stratified split left classes out of training: {missing}")
    return table.iloc[np.sort(train_idx)].reset_index(drop=True), table.iloc[np.sort(test_idx)].reset_index(drop=True)


# -- feature pipeline --------------------------------------------------------


def build_features(table: pd.DataFrame, schema: TableSchema) -> np.ndarray:
    """One-hot categoricals (schema category order, unknowns all-zero) + raw continuous."""
    blocks = []
    for spec in schema.columns:
        values = table[spec.name]
        if spec.kind == KIND_CATEGORICAL:
            strings = values.astype(str).to_numpy()
            onehot = np.zeros((len(table), spec.n_categories), dtype=np.float64)
            for j, cat in enumerate(spec.categories):
                onehot[:, j] = strings == cat
            blocks.append(onehot)
        else:
            blocks.append(values.astype(np.float64).to_numpy().reshape(-1, 1))
    return np.hstack(blocks)


def _continuous_feature_mask(schema: TableSchema) -> np.ndarray:
    mask = []
    for spec in schema.columns:
        if spec.kind == KIND_CATEGORICAL:
            mask.extend([False] * spec.n_categories)
        else:
            mask.append(True)
    return np.array(mask, dtype=bool)


def _standardize(train_X: np.ndarray, test_X: np.ndarray, mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    train_X, test_X = train_X.copy(), test_X.copy()
    mean = train_X[:, mask].mean(axis=0)
    std = train_X[:, mask].std(axis=0)
    std[std == 0.0] = 1.0
    train_X[:, mask] = (train_X[:, mask] - mean) / std
    test_X[:, mask] = (test_X[:, mask] - mean) / std
    return train_X, test_X


def _labels(table: pd.DataFrame, schema: TableSchema) -> np.ndarray:
    values = table[schema.target.name]
    if schema.target.task == TASK_CLASSIFICATION:
        return values.astype(str).to_numpy()
    return values.astype(np.float64).to_numpy()


class _ConstantModel:
    """Trivial predictor for a degenerate single-class training set."""

    def __init__(self, value):
        self.value = value

    def predict(self, X):
        return np.full(len(X), self.value)


def fit_logistic_or_linear(train_X: np.ndarray, train_y: np.ndarray, task: str, max_iter: int):
    """L2 logistic regression (C=1) for classification, OLS for regression."""
    if task == TASK_CLASSIFICATION:
        if len(np.unique(train_y)) < 2:
            return _ConstantModel(train_y[0])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # convergence is capped by design
            return LogisticRegression(C=1.0, max_iter=max_iter).fit(train_X, train_y)
    return LinearRegression().fit(train_X, train_y)


def fit_decision_tree(train_X: np.ndarray, train_y: np.ndarray, task: str, max_depth: int, seed: int = 0):
    """Depth-limited CART: Gini for classification, variance reduction for regression."""
    cls = DecisionTreeClassifier if task == TASK_CLASSIFICATION else DecisionTreeRegressor
    return cls(max_depth=max_depth, random_state=seed).fit(train_X, train_y)


def fit_random_forest(
    train_X: np.ndarray,
    train_y: np.ndarray,
    task: str,
    max_depth: int,
    n_estimators: int,
    seed: int = 0,
    bootstrap: bool = True,
    max_features="sqrt",
):
    """Bagged CART trees with sqrt-feature subsampling per split."""
    cls = RandomForestClassifier if task == TASK_CLASSIFICATION else RandomForestRegressor
    return cls(
        n_estimators=n_estimators,
        max_depth=max_depth,
        max_features=max_features,
        bootstrap=bootstrap,
        random_state=seed,
    ).fit(train_X, train_y)


def _score(model, test_X: np.ndarray, test_y: np.ndarray, task: str) -> float:
    pred = model.predict(test_X)
    if task == TASK_CLASSIFICATION:
        return float(accuracy_score(test_y, pred) * 100.0)
    return float(mean_squared_error(test_y, pred))


def _fit_and_score_all(
    train_frame: pd.DataFrame,
    test_frame: pd.DataFrame,
    schema: TableSchema,
    config: EvalConfig,
) -> dict[str, float]:
    task = schema.target.task
    train_X = build_features(train_frame, schema)
    test_X = build_features(test_frame, schema)
    train_y = _labels(train_frame, schema)
    test_y = _labels(test_frame, schema)
    cont_mask = _continuous_feature_mask(schema)
    lr_train_X, lr_test_X = _standardize(train_X, test_X, cont_mask)

    scores = {}
    lr = fit_logistic_or_linear(lr_train_X, train_y, task, config.lr_max_iter)
    scores["LR"] = _score(lr, lr_test_X, test_y, task)
    dt = fit_decision_tree(train_X, train_y, task, config.dt_max_depth, seed=config.seed)
    scores["DT"] = _score(dt, test_X, test_y, task)
    rf = fit_random_forest(
        train_X, train_y, task, config.rf_max_depth, config.rf_n_estimators, seed=config.seed
    )
    scores["RF"] = _score(rf, test_X, test_y, task)
    return scores


# -- synthetic set generation -------------------------------------------------


def _synthetic_labels(real_labels: np.ndarray, task: str, n: int, rng: np.random.Generator) -> np.ndarray:
    """Labels matching the real training split's empirical distribution."""
    if task == TASK_CLASSIFICATION:
        classes, counts = np.unique(real_labels.astype(str), return_counts=True)
        quotas = _largest_remainder_counts(counts / counts.sum(), n)
        labels = np.repeat(classes, quotas)
    else:
        labels = rng.choice(real_labels.astype(np.float64), size=n, replace=True)
    return labels[rng.permutation(n)]


def generate_synthetic_set(
    checkpoint: Checkpoint,
    real_train: pd.DataFrame,
    sample_config: SampleConfig,
    rng: np.random.Generator,
    model=None,
) -> pd.DataFrame:
    """One synthetic training set of |real_train| rows, labels from the real prior."""
    schema = checkpoint.schema
    target = schema.target
    n = len(real_train)
    labels = _synthetic_labels(real_train[target.name].to_numpy(), target.task, n, rng)
    conditions = encode_condition_column(labels, target)
    if model is None:
        model = checkpoint.build_model(use_ema=sample_config.use_ema)
    bits = sample_bits(model, conditions, checkpoint.schedule, sample_config, rng, null_condition(target))
    frame = decode_table(bits, schema)
    frame[target.name] = labels
    return frame[schema.header()]


def _frame_sha256(frame: pd.DataFrame) -> str:
    return hashlib.sha256(frame.to_csv(index=False).encode("utf-8")).hexdigest()


def ml_efficiency(
    checkpoint: Checkpoint,
    real_train: pd.DataFrame,
    real_test: pd.DataFrame,
    config: EvalConfig,
    dataset_name: str = "dataset",
    checkpoint_hash: str | None = None,
) -> EvalReport:
    """Mean +/- std downstream scores over synthetic sets, plus the real-trained reference."""
    schema = checkpoint.schema
    missing = [c for c in schema.header() if c not in real_train.columns]
    if missing:
        raise ValueError(f"dataset does not match checkpoint schema; missing columns: {missing}")
    task = schema.target.task

    model = checkpoint.build_model(use_ema=config.sample.use_ema)
    root = np.random.default_rng(config.seed)
    set_rngs = root.spawn(config.n_synthetic_sets)

    per_model_scores: dict[str, list[float]] = {name: [] for name in DOWNSTREAM_MODELS}
    for rng in set_rngs:
        synthetic = generate_synthetic_set(checkpoint, real_train, config.sample, rng, model=model)
        scores = _fit_and_score_all(synthetic, real_test, schema, config)
        for name in DOWNSTREAM_MODELS:
            per_model_scores[name].append(scores[name])
    reference = _fit_and_score_all(real_train, real_test, schema, config)

    models = {}
    for name in DOWNSTREAM_MODELS:
        arr = np.array(per_model_scores[name])
        models[name] = {
            "mean": float(arr.mean()),
            "std": float(arr.std(ddof=1)) if len(arr) > 1 else 0.0,
            "scores": [float(v) for v in arr],
            "reference": reference[name],
        }

    return EvalReport(
        dataset=dataset_name,
        task=task,
        metric="accuracy_pct" if task == TASK_CLASSIFICATION else "mse",
        direction="higher" if task == TASK_CLASSIFICATION else "lower",
        n_synthetic_sets=config.n_synthetic_sets,
        label_sampling="real_train_prior",
        models=models,
        split_info={
            "train_rows": len(real_train),
            "test_rows": len(real_test),
            "test_sha256": _frame_sha256(real_test),
        },
        checkpoint_hash=checkpoint_hash,
        config={
            "train_fraction": config.train_fraction,
            "lr_max_iter": config.lr_max_iter,
            "dt_max_depth": config.dt_max_depth,
            "rf_max_depth": config.rf_max_depth,
            "rf_n_estimators": config.rf_n_estimators,
            "seed": config.seed,
            "sample": config.sample.to_json_dict(),
        },
    )


def steps_sweep(
    checkpoint: Checkpoint,
    real_train: pd.DataFrame,
    real_test: pd.DataFrame,
    steps_list: list[int],
    config: EvalConfig,
    dataset_name: str = "dataset",
) -> pd.DataFrame:
    """ml_efficiency per sampling-step count; one row per (n_steps, downstream model)."""
    if not steps_list:
        raise ValueError("steps_list must be non-empty")
    rows = []
    for n_steps in steps_list:
        sweep_sample = SampleConfig(**{**config.sample.to_json_dict(), "n_steps": n_steps})
        sweep_config = EvalConfig(
            train_fraction=config.train_fraction,
            n_synthetic_sets=config.n_synthetic_sets,
            lr_max_iter=config.lr_max_iter,
            dt_max_depth=config.dt_max_depth,
            rf_max_depth=config.rf_max_depth,
            rf_n_estimators=config.rf_n_estimators,
            seed=config.seed,
            sample=sweep_sample,
        )
        report = ml_efficiency(checkpoint, real_train, real_test, sweep_config, dataset_name=dataset_name)
        for name in DOWNSTREAM_MODELS:
            entry = report.models[name]
            rows.append(
                {
                    "n_steps": n_steps,
                    "model": name,
                    "metric": report.metric,
                    "mean": entry["mean"],
                    "std": entry["std"],
                    "reference": entry["reference"],
                }
            )
    return pd.DataFrame(rows)
