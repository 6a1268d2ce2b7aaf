"""Lossless transformation between mixed-type table rows and fixed-width bit vectors.

Continuous values are min-max normalized and written as the IEEE-754 binary32
bit pattern of the normalized value, MSB first (sign, exponent, fraction).
Categorical values are written as their index in the ordered category list, as
an unsigned big-endian integer. Column encodings are concatenated in schema
order into a row of exactly ``schema.total_bits`` bits.

Decoding is total: any of the 2^32 float patterns decodes (NaN -> 0, then
clamp to [0, 1] before rescaling) and out-of-range categorical codes clamp to
the last category, so every generated bit row maps back to a valid record.
"""

from __future__ import annotations

import math

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .schema import (
    CONTINUOUS_BITS,
    KIND_CATEGORICAL,
    KIND_CONTINUOUS,
    TASK_CLASSIFICATION,
    ColumnSpec,
    TableSchema,
    TargetSpec,
    as_string_frame,
    infer_schema,
)

_BIT_SHIFTS_32 = np.arange(CONTINUOUS_BITS - 1, -1, -1, dtype=np.uint32)


def _check_bits(bits: np.ndarray, width: int, what: str) -> np.ndarray:
    bits = np.asarray(bits)
    if bits.shape[-1] != width:
        raise ValueError(f"{what}: expected {width} bits, got {bits.shape[-1]}")
    if bits.size and not np.isin(bits, (0, 1)).all():
        raise ValueError(f"{what}: bits must be 0 or 1")
    return bits.astype(np.uint8)


def _normalize_column(values: np.ndarray, spec: ColumnSpec) -> np.ndarray:
    """Min-max normalize to [0, 1]; a degenerate (max == min) column encodes as 0."""
    if not np.isfinite(values).all():
        raise ValueError(f"column {spec.name!r}: NaN/Inf values must be cleaned upstream")
    if spec.max > spec.min:
        return np.clip((values - spec.min) / (spec.max - spec.min), 0.0, 1.0)
    return np.zeros_like(values)


def encode_continuous_column(values: np.ndarray, spec: ColumnSpec) -> np.ndarray:
    """Encode a float64 vector into an (n, 32) bit matrix."""
    normalized = _normalize_column(np.asarray(values, dtype=np.float64), spec)
    words = normalized.astype(np.float32).view(np.uint32)
    return ((words[:, None] >> _BIT_SHIFTS_32) & np.uint32(1)).astype(np.uint8)


def decode_continuous_column(bits: np.ndarray, spec: ColumnSpec) -> np.ndarray:
    """Decode an (n, 32) bit matrix back to float64 values in [min, max]."""
    bits = _check_bits(bits, CONTINUOUS_BITS, f"column {spec.name!r}")
    words = (bits.astype(np.uint32) << _BIT_SHIFTS_32).sum(axis=-1, dtype=np.uint32)
    # NaN patterns (incl. signaling NaNs, which trap on float casts) map to 0
    # in the integer domain so decode is total and silent for all 2^32 words.
    is_nan = ((words >> 23) & np.uint32(0xFF)) == 255
    is_nan &= (words & np.uint32(0x7FFFFF)) != 0
    words = np.where(is_nan, np.uint32(0), words)
    normalized = np.clip(words.view(np.float32).astype(np.float64), 0.0, 1.0)
    return spec.min + normalized * (spec.max - spec.min)


def encode_continuous(value: float, spec: ColumnSpec) -> np.ndarray:
    if spec.kind != KIND_CONTINUOUS:
        raise ValueError(f"column {spec.name!r} is not continuous")
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"column {spec.name!r}: NaN/Inf values must be cleaned upstream")
    return encode_continuous_column(np.array([value]), spec)[0]


def decode_continuous(bits: np.ndarray, spec: ColumnSpec) -> float:
    return float(decode_continuous_column(np.asarray(bits)[None, :], spec)[0])


def encode_categorical_column(values: list[str] | np.ndarray, spec: ColumnSpec) -> np.ndarray:
    """Encode category strings into an (n, bit_width) bit matrix."""
    lookup = {cat: i for i, cat in enumerate(spec.categories)}
    try:
        codes = np.array([lookup[v] for v in values], dtype=np.uint32)
    except KeyError as exc:
        bad = exc.args[0]
        row = next(i for i, v in enumerate(values) if v == bad)
        raise ValueError(f"column {spec.name!r}: unknown category {bad!r} at row {row}") from None
    shifts = np.arange(spec.bit_width - 1, -1, -1, dtype=np.uint32)
    return ((codes[:, None] >> shifts) & np.uint32(1)).astype(np.uint8)


def decode_categorical_column(bits: np.ndarray, spec: ColumnSpec) -> np.ndarray:
    """Decode an (n, bit_width) bit matrix to category strings, clamping invalid codes."""
    bits = _check_bits(bits, spec.bit_width, f"column {spec.name!r}")
    shifts = np.arange(spec.bit_width - 1, -1, -1, dtype=np.uint32)
    codes = (bits.astype(np.uint32) << shifts).sum(axis=-1, dtype=np.uint32)
    codes = np.minimum(codes, spec.n_categories - 1)
    return np.array(spec.categories, dtype=object)[codes]


def encode_categorical(value: str, spec: ColumnSpec) -> np.ndarray:
    if spec.kind != KIND_CATEGORICAL:
        raise ValueError(f"column {spec.name!r} is not categorical")
    return encode_categorical_column([str(value)], spec)[0]


def decode_categorical(bits: np.ndarray, spec: ColumnSpec) -> str:
    return str(decode_categorical_column(np.asarray(bits)[None, :], spec)[0])


def encode_row(record: list, schema: TableSchema) -> np.ndarray:
    """Concatenate per-column encodings of one record (schema column order)."""
    if len(record) != len(schema.columns):
        raise ValueError(f"record has {len(record)} values, schema has {len(schema.columns)} columns")
    parts = []
    for value, spec in zip(record, schema.columns):
        if spec.kind == KIND_CONTINUOUS:
            parts.append(encode_continuous(float(value), spec))
        else:
            parts.append(encode_categorical(str(value), spec))
    return np.concatenate(parts)


def decode_row(bits: np.ndarray, schema: TableSchema) -> list:
    """Split one bit row back into raw values (floats / category strings)."""
    bits = _check_bits(np.asarray(bits), schema.total_bits, "row")
    record = []
    for spec, sl in schema.bit_slices():
        if spec.kind == KIND_CONTINUOUS:
            record.append(decode_continuous(bits[sl], spec))
        else:
            record.append(decode_categorical(bits[sl], spec))
    return record


def encode_table(table: pd.DataFrame, schema: TableSchema) -> np.ndarray:
    """Encode a full table (feature columns only) into an (n, d) uint8 bit matrix."""
    frame = as_string_frame(table)
    missing = [c.name for c in schema.columns if c.name not in frame.columns]
    if missing:
        raise ValueError(f"table is missing schema columns: {missing}")
    n = len(frame)
    out = np.empty((n, schema.total_bits), dtype=np.uint8)
    for spec, sl in schema.bit_slices():
        raw = frame[spec.name].to_numpy()
        if spec.kind == KIND_CONTINUOUS:
            values = np.empty(n, dtype=np.float64)
            for i, cell in enumerate(raw):
                try:
                    values[i] = float(cell)
                except (TypeError, ValueError):
                    raise ValueError(
                        f"column {spec.name!r}: non-numeric value {cell!r} at row {i}"
                    ) from None
            if not np.isfinite(values).all():
                row = int(np.flatnonzero(~np.isfinite(values))[0])
                raise ValueError(
                    f"column {spec.name!r}: non-finite value at row {row} (clean upstream)"
                )
            out[:, sl] = encode_continuous_column(values, spec)
        else:
            out[:, sl] = encode_categorical_column(raw, spec)
    return out


def decode_table(bits: np.ndarray, schema: TableSchema) -> pd.DataFrame:
    """Decode an (n, d) bit matrix into a DataFrame of feature columns (schema order)."""
    bits = np.asarray(bits)
    if bits.ndim != 2 or bits.shape[1] != schema.total_bits:
        raise ValueError(f"expected shape (n, {schema.total_bits}), got {bits.shape}")
    data = {}
    for spec, sl in schema.bit_slices():
        if spec.kind == KIND_CONTINUOUS:
            data[spec.name] = decode_continuous_column(bits[:, sl], spec)
        else:
            data[spec.name] = decode_categorical_column(bits[:, sl], spec)
    return pd.DataFrame(data)


# -- condition encoding ----------------------------------------------------


def encode_condition(y, target: TargetSpec) -> np.ndarray:
    """Encode one label: one-hot for classification, min-max normalized scalar for regression."""
    if target.task == TASK_CLASSIFICATION:
        label = str(y)
        if label not in target.classes:
            raise ValueError(f"unknown class {label!r} for target {target.name!r}")
        vec = np.zeros(target.condition_dim, dtype=np.float32)
        vec[target.classes.index(label)] = 1.0
        return vec
    value = float(y)
    if not math.isfinite(value):
        raise ValueError(f"target {target.name!r}: value must be finite")
    normalized = (value - target.min) / (target.max - target.min)
    return np.array([min(max(normalized, 0.0), 1.0)], dtype=np.float32)


def null_condition(target: TargetSpec) -> np.ndarray:
    """The no-conditioning token: all-zeros one-hot slot, or -1 for regression."""
    if target.task == TASK_CLASSIFICATION:
        return np.zeros(target.condition_dim, dtype=np.float32)
    return np.array([-1.0], dtype=np.float32)


def encode_condition_column(labels, target: TargetSpec) -> np.ndarray:
    """Encode a label vector into an (n, condition_dim) float32 matrix."""
    return np.stack([encode_condition(y, target) for y in labels]).astype(np.float32)


# -- sklearn-style facade ----------------------------------------------------


class BinaryTableCodec(BaseEstimator, TransformerMixin):
    """Transformer between mixed-type DataFrames and fixed-width binary rows.

    ``fit`` infers (or adopts) a TableSchema from training data; ``transform``
    yields the (n, d) uint8 bit matrix of the feature columns; and
    ``inverse_transform`` maps bit rows back to a DataFrame. The fitted schema
    is exposed as ``schema_`` and serializes to JSON.
    """

    def __init__(self, target_column=None, task=TASK_CLASSIFICATION, type_hints=None, schema=None):
        self.target_column = target_column
        self.task = task
        self.type_hints = type_hints
        self.schema = schema

    def fit(self, X: pd.DataFrame, y=None):
        if self.schema is not None:
            self.schema_ = self.schema
        else:
            if self.target_column is None:
                raise ValueError("target_column is required when no schema is supplied")
            self.schema_ = infer_schema(X, self.target_column, task=self.task, type_hints=self.type_hints)
        return self

    def _require_fit(self) -> TableSchema:
        if not hasattr(self, "schema_"):
            raise NotFittedError("BinaryTableCodec is not fitted; call fit first")
        return self.schema_

    def transform(self, X: pd.DataFrame) -> np.ndarray:
        schema = self._require_fit()
        return encode_table(X, schema)

    def inverse_transform(self, bits: np.ndarray) -> pd.DataFrame:
        schema = self._require_fit()
        return decode_table(bits, schema)

    def transform_labels(self, labels) -> np.ndarray:
        return encode_condition_column(labels, self._require_fit().target)

    @property
    def n_bits_(self) -> int:
        return self._require_fit().total_bits
