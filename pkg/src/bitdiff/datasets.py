"""Benchmark dataset registry and deterministic demo data generators.

The registry carries, per named benchmark, the target column, the task, and
the downstream-model hyperparameters used by the evaluation harness. Raw
benchmark files are fetched by the user (licensing); when an expected sha256
is set for a preset it is verified at load time, and every run manifest
records the actual hash of its inputs.

The generators build small deterministic datasets with the same shape as the
benchmarks so the pipeline can be exercised end to end without downloads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd


@dataclass(frozen=True)
class DatasetPreset:
    name: str
    target_column: str
    task: str
    filename: str
    lr_max_iter: int | None
    dt_max_depth: int
    rf_max_depth: int
    rf_n_estimators: int
    type_hints: dict | None = None
    expected_sha256: str | None = None


REGISTRY: dict[str, DatasetPreset] = {
    p.name: p
    for p in [
        # ServicesOpted is a 1..6 ordinal; binary-coding its six levels is far
        # more robust than a 32-bit float field for so few distinct values.
        DatasetPreset("travel", "Target", "classification", "travel.csv", 100, 6, 12, 75,
                      type_hints={"ServicesOpted": "categorical"}),
        DatasetPreset("sick", "Class", "classification", "sick.csv", 200, 10, 12, 90),
        DatasetPreset("heloc", "RiskPerformance", "classification", "heloc.csv", 500, 6, 12, 78),
        DatasetPreset("adult", "income", "classification", "adult.csv", 1000, 8, 12, 85),
        DatasetPreset("diabetes", "readmitted", "classification", "diabetes.csv", 500, 10, 20, 120),
        DatasetPreset("california", "median_house_value", "regression", "california.csv", None, 10, 12, 85),
    ]
}


def get_preset(name: str) -> DatasetPreset:
    try:
        return REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown dataset preset {name!r}; known: {sorted(REGISTRY)}") from None


def _quota_choice(rng: np.random.Generator, values: list, probs: list[float], n: int) -> np.ndarray:
    """Sample n values matching probs as exact quotas (largest remainder), shuffled."""
    raw = np.asarray(probs, dtype=float) * n
    counts = np.floor(raw).astype(int)
    short = n - counts.sum()
    if short > 0:
        counts[np.argsort(-(raw - counts))[:short]] += 1
    items = np.empty(len(values), dtype=object)  # keeps tuple values atomic
    for i, v in enumerate(values):
        items[i] = v
    out = np.repeat(items, counts)
    return out[rng.permutation(n)]


def make_travel_like(n_rows: int = 954, seed: int = 11) -> pd.DataFrame:
    """A churn table shaped like the Travel benchmark (~23% positive class).

    Features are drawn independently; churn probability is high inside a union
    of axis-aligned segments (high-income frequent flyers, synced-but-no-hotel
    heavy users, maximal services, young low-income heavy users) and low
    outside it. Rule structure gives tree models a stable edge over the linear
    model, mirroring how the three downstream models separate on the benchmark.
    """
    rng = np.random.default_rng(seed)
    age = np.clip(np.round(rng.normal(31.4, 2.8, n_rows)), 27, 38).astype(int)
    flyer = rng.choice(["No", "No Record", "Yes"], n_rows, p=[0.52, 0.18, 0.30])
    income = rng.choice(["Low Income", "Middle Income", "High Income"], n_rows, p=[0.35, 0.40, 0.25])
    services = rng.choice([1, 2, 3, 4, 5, 6], n_rows, p=[0.22, 0.24, 0.18, 0.16, 0.12, 0.08])
    synced = rng.choice(["No", "Yes"], n_rows, p=[0.55, 0.45])
    hotel = rng.choice(["No", "Yes"], n_rows, p=[0.58, 0.42])

    churn_segment = (
        ((flyer == "Yes") & (income == "High Income"))
        | ((synced == "Yes") & (hotel == "No") & (services >= 5))
        | (services == 6)
        | ((flyer == "No") & (income == "Low Income") & (services >= 5))
    )
    churn_prob = np.where(churn_segment, 0.87, 0.05)
    churn = (rng.random(n_rows) < churn_prob).astype(int).astype(str)

    return pd.DataFrame(
        {
            "Age": age,
            "FrequentFlyer": flyer,
            "AnnualIncomeClass": income,
            "ServicesOpted": services,
            "AccountSyncedToSocialMedia": synced,
            "BookedHotelOrNot": hotel,
            "Target": churn,
        }
    )


# Ground-truth class-conditional joints for the two-bit toy: cell order is
# (first=a, second=u), (a, v), (b, u), (b, v). Each class concentrates on one
# cell with stochastic minority cells; the shape is chosen so every denoise
# decision along the sampling grid stays clear of the binarization threshold
# (the few-step XOR sampler can only reproduce joints of this family).
TOY_JOINTS = {
    "0": np.array([0.93, 0.032, 0.032, 0.006]),
    "1": np.array([0.006, 0.032, 0.032, 0.93]),
}
TOY_CELLS = [("a", "u"), ("a", "v"), ("b", "u"), ("b", "v")]


def make_binary_toy(n_rows: int = 500, seed: int = 11) -> pd.DataFrame:
    """Two binary categorical features with a known class-conditional joint.

    Rows are quota-sampled so the empirical conditional joint equals the
    TOY_JOINTS ground truth as closely as integer counts allow.
    """
    rng = np.random.default_rng(seed)
    label = _quota_choice(rng, ["0", "1"], [0.5, 0.5], n_rows)
    first = np.empty(n_rows, dtype=object)
    second = np.empty(n_rows, dtype=object)
    for cls, joint in TOY_JOINTS.items():
        idx = np.flatnonzero(label == cls)
        cells = _quota_choice(rng, TOY_CELLS, list(joint), len(idx))
        first[idx] = [c[0] for c in cells]
        second[idx] = [c[1] for c in cells]
    return pd.DataFrame({"f1": first, "f2": second, "label": label})
