"""Table schemas: the metadata that makes the binary transformation reversible.

A schema records, per column, everything needed to encode a raw value into a
fixed-width bit field and to decode it back: min/max for continuous columns
(min-max normalization before the 32-bit float encoding) and the ordered
category list plus bit width for categorical columns. The prediction target is
kept out of the encoded row and described separately, since generation is
conditioned on it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import pandas as pd

CONTINUOUS_BITS = 32

KIND_CONTINUOUS = "continuous"
KIND_CATEGORICAL = "categorical"

TASK_CLASSIFICATION = "classification"
TASK_REGRESSION = "regression"

SCHEMA_FORMAT_VERSION = 1


def bit_width_for(n_categories: int) -> int:
    """Bits needed to index ``n_categories`` values; a 1-category column still takes 1 bit."""
    if n_categories < 1:
        raise ValueError("a categorical column needs at least one category")
    return max(1, math.ceil(math.log2(n_categories)))


def _parse_finite_float(text: str) -> float | None:
    """Return the float value of ``text`` if it parses and is finite, else None."""
    try:
        value = float(text)
    except (TypeError, ValueError):
        return None
    return value if math.isfinite(value) else None


@dataclass(frozen=True)
class ColumnSpec:
    """Per-column encoding spec. Continuous columns use min/max; categorical use categories."""

    name: str
    kind: str
    min: float | None = None
    max: float | None = None
    categories: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind == KIND_CONTINUOUS:
            if self.min is None or self.max is None:
                raise ValueError(f"column {self.name!r}: continuous spec needs min and max")
            if not (math.isfinite(self.min) and math.isfinite(self.max)):
                raise ValueError(f"column {self.name!r}: min/max must be finite")
            if self.min > self.max:
                raise ValueError(f"column {self.name!r}: min {self.min} > max {self.max}")
        elif self.kind == KIND_CATEGORICAL:
            if not self.categories:
                raise ValueError(f"column {self.name!r}: categorical spec needs categories")
            if len(set(self.categories)) != len(self.categories):
                raise ValueError(f"column {self.name!r}: duplicate categories")
        else:
            raise ValueError(f"column {self.name!r}: unknown kind {self.kind!r}")

    @property
    def bit_width(self) -> int:
        if self.kind == KIND_CONTINUOUS:
            return CONTINUOUS_BITS
        return bit_width_for(len(self.categories))

    @property
    def n_categories(self) -> int:
        if self.kind != KIND_CATEGORICAL:
            raise ValueError(f"column {self.name!r} is not categorical")
        return len(self.categories)


@dataclass(frozen=True)
class TargetSpec:
    """The prediction target: class list for classification, value range for regression."""

    name: str
    task: str
    classes: tuple[str, ...] | None = None
    min: float | None = None
    max: float | None = None

    def __post_init__(self) -> None:
        if self.task == TASK_CLASSIFICATION:
            if not self.classes or len(self.classes) < 2:
                raise ValueError(f"target {self.name!r}: classification needs >= 2 classes")
            if len(set(self.classes)) != len(self.classes):
                raise ValueError(f"target {self.name!r}: duplicate classes")
        elif self.task == TASK_REGRESSION:
            if self.min is None or self.max is None or not self.min < self.max:
                raise ValueError(f"target {self.name!r}: regression needs min < max")
        else:
            raise ValueError(f"target {self.name!r}: unknown task {self.task!r}")

    @property
    def condition_dim(self) -> int:
        """Width of the encoded condition vector: one-hot size or a single scalar."""
        return len(self.classes) if self.task == TASK_CLASSIFICATION else 1


@dataclass(frozen=True)
class TableSchema:
    """Ordered column specs (target excluded), the target spec, and the row width d."""

    columns: tuple[ColumnSpec, ...]
    target: TargetSpec
    target_position: int = field(default=-1)  # index in the original header; -1 = append last

    def __post_init__(self) -> None:
        if not self.columns:
            raise ValueError("schema needs at least one feature column")
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise ValueError("duplicate column names in schema")
        if self.target.name in names:
            raise ValueError("target column must not appear among feature columns")

    @property
    def total_bits(self) -> int:
        return sum(c.bit_width for c in self.columns)

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> ColumnSpec:
        for spec in self.columns:
            if spec.name == name:
                return spec
        raise KeyError(f"no column {name!r} in schema")

    def header(self) -> list[str]:
        """Original header order, target column included."""
        names = self.column_names
        pos = self.target_position
        if pos < 0 or pos > len(names):
            pos = len(names)
        return names[:pos] + [self.target.name] + names[pos:]

    def bit_slices(self) -> list[tuple[ColumnSpec, slice]]:
        """Per-column slices into the concatenated bit row, in schema order."""
        out = []
        offset = 0
        for spec in self.columns:
            width = spec.bit_width
            out.append((spec, slice(offset, offset + width)))
            offset += width
        return out

    # -- JSON serialization ------------------------------------------------

    def to_json_dict(self) -> dict:
        columns = []
        for spec in self.columns:
            if spec.kind == KIND_CONTINUOUS:
                # Decimal strings keep full float64 precision independent of JSON readers.
                columns.append(
                    {"name": spec.name, "kind": spec.kind, "min": repr(spec.min), "max": repr(spec.max)}
                )
            else:
                columns.append(
                    {
                        "name": spec.name,
                        "kind": spec.kind,
                        "categories": list(spec.categories),
                        "bit_width": spec.bit_width,
                    }
                )
        target: dict = {"name": self.target.name, "task": self.target.task}
        if self.target.task == TASK_CLASSIFICATION:
            target["classes"] = list(self.target.classes)
        else:
            target["min"] = repr(self.target.min)
            target["max"] = repr(self.target.max)
        return {
            "format_version": SCHEMA_FORMAT_VERSION,
            "columns": columns,
            "target": target,
            "target_position": self.target_position,
            "total_bits": self.total_bits,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "TableSchema":
        columns = []
        for col in doc["columns"]:
            if col["kind"] == KIND_CONTINUOUS:
                columns.append(
                    ColumnSpec(col["name"], KIND_CONTINUOUS, min=float(col["min"]), max=float(col["max"]))
                )
            else:
                spec = ColumnSpec(col["name"], KIND_CATEGORICAL, categories=tuple(col["categories"]))
                if col.get("bit_width") is not None and col["bit_width"] != spec.bit_width:
                    raise ValueError(f"column {col['name']!r}: stored bit_width disagrees with categories")
                columns.append(spec)
        tgt = doc["target"]
        if tgt["task"] == TASK_CLASSIFICATION:
            target = TargetSpec(tgt["name"], TASK_CLASSIFICATION, classes=tuple(tgt["classes"]))
        else:
            target = TargetSpec(tgt["name"], TASK_REGRESSION, min=float(tgt["min"]), max=float(tgt["max"]))
        schema = cls(tuple(columns), target, target_position=doc.get("target_position", -1))
        if doc.get("total_bits") is not None and doc["total_bits"] != schema.total_bits:
            raise ValueError("stored total_bits disagrees with column widths")
        return schema

    @classmethod
    def from_json(cls, text: str) -> "TableSchema":
        return cls.from_json_dict(json.loads(text))


def as_string_frame(table: pd.DataFrame) -> pd.DataFrame:
    """Coerce every cell to str, rejecting missing values (no imputation is done anywhere)."""
    if table.isna().any().any():
        bad = table.columns[table.isna().any()].tolist()
        raise ValueError(f"missing values are not supported (clean upstream); columns: {bad}")
    frame = table.astype(str)
    for name in frame.columns:
        if (frame[name] == "").any():
            row = int((frame[name] == "").idxmax())
            raise ValueError(f"missing value in column {name!r} at row {row}")
    return frame


def infer_schema(
    table: pd.DataFrame,
    target_name: str,
    task: str = TASK_CLASSIFICATION,
    type_hints: dict[str, str] | None = None,
) -> TableSchema:
    """Infer a TableSchema from raw (string) records.

    A column is continuous iff every value parses as a finite number, unless a
    type hint overrides it. Continuous min/max are taken over the data;
    categorical categories are sorted lexicographically so schemas are
    reproducible across runs and platforms.
    """
    if table.shape[0] == 0:
        raise ValueError("cannot infer a schema from an empty table")
    if target_name not in table.columns:
        raise ValueError(f"target column {target_name!r} not found in table")
    type_hints = dict(type_hints or {})
    for name in type_hints:
        if name not in table.columns:
            raise ValueError(f"type hint for unknown column {name!r}")
        if type_hints[name] not in (KIND_CONTINUOUS, KIND_CATEGORICAL):
            raise ValueError(f"type hint for {name!r} must be continuous or categorical")

    frame = as_string_frame(table)
    target_position = list(frame.columns).index(target_name)

    columns = []
    for name in frame.columns:
        if name == target_name:
            continue
        values = frame[name].tolist()
        parsed = [_parse_finite_float(v) for v in values]
        all_numeric = all(p is not None for p in parsed)
        hint = type_hints.get(name)
        if hint == KIND_CONTINUOUS and not all_numeric:
            bad = values[parsed.index(None)]
            raise ValueError(f"column {name!r} hinted continuous but value {bad!r} is not a finite number")
        kind = hint if hint else (KIND_CONTINUOUS if all_numeric else KIND_CATEGORICAL)
        if kind == KIND_CONTINUOUS:
            columns.append(ColumnSpec(name, KIND_CONTINUOUS, min=min(parsed), max=max(parsed)))
        else:
            categories = tuple(sorted(set(values)))
            columns.append(ColumnSpec(name, KIND_CATEGORICAL, categories=categories))

    target_values = frame[target_name].tolist()
    if task == TASK_CLASSIFICATION:
        target = TargetSpec(target_name, TASK_CLASSIFICATION, classes=tuple(sorted(set(target_values))))
    elif task == TASK_REGRESSION:
        parsed = [_parse_finite_float(v) for v in target_values]
        if any(p is None for p in parsed):
            bad = target_values[parsed.index(None)]
            raise ValueError(f"regression target {target_name!r} has non-numeric value {bad!r}")
        target = TargetSpec(target_name, TASK_REGRESSION, min=min(parsed), max=max(parsed))
    else:
        raise ValueError(f"unknown task {task!r}")

    return TableSchema(tuple(columns), target, target_position=target_position)
