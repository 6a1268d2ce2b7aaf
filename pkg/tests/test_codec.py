"""Codec tests: bit-level encode/decode against an independent IEEE-754 oracle."""


import struct

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bitdiff.codec import (
    BinaryTableCodec,
    decode_categorical,
    decode_continuous,
    decode_row,
    decode_table,
    encode_categorical,
    encode_condition,
    encode_continuous,
    encode_row,
    encode_table,
    null_condition,
)
from bitdiff.schema import ColumnSpec, TableSchema, TargetSpec, infer_schema


def float32_bits_oracle(value: float) -> list[int]:
    """Independent reference: big-endian struct pack of a float32, MSB first."""
    (word,) = struct.unpack(">I", struct.pack(">f", value))
    return [(word >> shift) & 1 for shift in range(31, -1, -1)]


CONT = ColumnSpec("x", "continuous", min=0.0, max=1.0)
CONT_RANGE = ColumnSpec("r", "continuous", min=10.0, max=20.0)
CAT4 = ColumnSpec("c4", "categorical", categories=("a", "b", "c", "d"))
CAT3 = ColumnSpec("c3", "categorical", categories=("x", "y", "z"))
CAT2 = ColumnSpec("c2", "categorical", categories=("no", "yes"))
TARGET = TargetSpec("label", "classification", classes=("n", "p"))


class TestEncodeContinuous:
    def test_min_maps_to_zero_bits(self):
        assert encode_continuous(10.0, CONT_RANGE).tolist() == [0] * 32

    def test_max_maps_to_one_point_zero_pattern(self):
        # Oracle-derived: 1.0f is sign 0, exponent 01111111, zero fraction.
        oracle = float32_bits_oracle(1.0)
        assert oracle == [0, 0, 1, 1, 1, 1, 1, 1, 1] + [0] * 23
        assert encode_continuous(20.0, CONT_RANGE).tolist() == oracle

    def test_midpoint_maps_to_half_pattern(self):
        oracle = float32_bits_oracle(0.5)
        assert oracle == [0, 0, 1, 1, 1, 1, 1, 1, 0] + [0] * 23
        assert encode_continuous(15.0, CONT_RANGE).tolist() == oracle

    def test_matches_struct_oracle_across_values(self):
        for v in [0.0, 0.1, 0.25, 1 / 3, 0.75, 0.999, 1.0]:
            expected = float32_bits_oracle(np.float32(v).item())
            assert encode_continuous(v, CONT).tolist() == expected

    def test_out_of_range_clamps(self):
        assert encode_continuous(-5.0, CONT_RANGE).tolist() == [0] * 32
        assert encode_continuous(99.0, CONT_RANGE).tolist() == float32_bits_oracle(1.0)

    def test_nan_and_inf_rejected(self):
        with pytest.raises(ValueError, match="cleaned upstream"):
            encode_continuous(float("nan"), CONT)
        with pytest.raises(ValueError, match="cleaned upstream"):
            encode_continuous(float("inf"), CONT)

    def test_degenerate_range_encodes_zero(self):
        spec = ColumnSpec("k", "continuous", min=3.0, max=3.0)
        assert encode_continuous(3.0, spec).tolist() == [0] * 32


class TestDecodeContinuous:
    def test_zero_bits(self):
        assert decode_continuous(np.zeros(32, dtype=np.uint8), CONT_RANGE) == 10.0

    def test_one_pattern_rescales_to_max(self):
        bits = np.array(float32_bits_oracle(1.0), dtype=np.uint8)
        assert decode_continuous(bits, CONT_RANGE) == 20.0

    def test_nan_pattern_decodes_to_min(self):
        # Exponent all ones, nonzero fraction.
        bits = np.array([0] + [1] * 8 + [1] + [0] * 22, dtype=np.uint8)
        assert decode_continuous(bits, CONT) == 0.0

    def test_infinity_pattern_clamps_to_max(self):
        bits = np.array([0] + [1] * 8 + [0] * 23, dtype=np.uint8)
        assert decode_continuous(bits, CONT_RANGE) == 20.0
        bits[0] = 1  # negative infinity
        assert decode_continuous(bits, CONT_RANGE) == 10.0

    def test_every_pattern_is_decodable(self):
        rng = np.random.default_rng(0)
        bits = rng.integers(0, 2, size=(2000, 32), dtype=np.uint8)
        for row in bits:
            value = decode_continuous(row, CONT_RANGE)
            assert 10.0 <= value <= 20.0

    def test_wrong_width_rejected(self):
        with pytest.raises(ValueError, match="32 bits"):
            decode_continuous(np.zeros(31, dtype=np.uint8), CONT)


class TestCategorical:
    def test_index_is_big_endian(self):
        assert encode_categorical("c", CAT4).tolist() == [1, 0]  # index 2

    def test_first_category_is_zero(self):
        assert encode_categorical("no", CAT2).tolist() == [0]

    def test_five_categories_use_three_bits(self):
        spec = ColumnSpec("c5", "categorical", categories=tuple("abcde"))
        assert spec.bit_width == 3
        assert encode_categorical("e", spec).tolist() == [1, 0, 0]  # index 4

    def test_unknown_category_names_column_and_value(self):
        with pytest.raises(ValueError, match=r"'c4'.*'zzz'"):
            encode_categorical("zzz", CAT4)

    def test_decode_inverts_encode(self):
        for value in CAT4.categories:
            assert decode_categorical(encode_categorical(value, CAT4), CAT4) == value

    def test_out_of_range_code_clamps_to_last(self):
        assert decode_categorical(np.array([1, 1], dtype=np.uint8), CAT3) == "z"  # code 3 >= K=3

    def test_single_bit_decode(self):
        assert decode_categorical(np.array([1], dtype=np.uint8), CAT2) == "yes"


MIXED_SCHEMA = TableSchema(
    columns=(CONT_RANGE, CAT4),
    target=TARGET,
)


class TestRowCodec:
    def test_total_width(self):
        assert MIXED_SCHEMA.total_bits == 34

    def test_three_continuous_two_binary_is_98(self):
        schema = TableSchema(
            columns=(
                ColumnSpec("a", "continuous", min=0.0, max=1.0),
                ColumnSpec("b", "continuous", min=0.0, max=1.0),
                ColumnSpec("c", "continuous", min=0.0, max=1.0),
                ColumnSpec("d", "categorical", categories=("0", "1")),
                ColumnSpec("e", "categorical", categories=("0", "1")),
            ),
            target=TARGET,
        )
        assert schema.total_bits == 98

    def test_round_trip(self):
        row = encode_row([12.5, "b"], MIXED_SCHEMA)
        assert row.shape == (34,)
        decoded = decode_row(row, MIXED_SCHEMA)
        assert decoded[0] == pytest.approx(12.5, abs=1e-5)
        assert decoded[1] == "b"

    def test_arity_mismatch(self):
        with pytest.raises(ValueError, match="record has 1"):
            encode_row([12.5], MIXED_SCHEMA)


class TestTableCodec:
    def test_encode_decode_frame(self):
        frame = pd.DataFrame({"r": ["10", "15", "20"], "c4": ["a", "d", "b"]})
        bits = encode_table(frame, MIXED_SCHEMA)
        assert bits.shape == (3, 34)
        back = decode_table(bits, MIXED_SCHEMA)
        assert back["c4"].tolist() == ["a", "d", "b"]
        np.testing.assert_allclose(back["r"], [10.0, 15.0, 20.0], atol=1e-4)

    def test_missing_column_reported(self):
        with pytest.raises(ValueError, match="missing schema columns"):
            encode_table(pd.DataFrame({"r": ["10"]}), MIXED_SCHEMA)

    def test_missing_value_rejected(self):
        frame = pd.DataFrame({"r": ["10", ""], "c4": ["a", "b"]})
        with pytest.raises(ValueError, match="missing value"):
            encode_table(frame, MIXED_SCHEMA)

    def test_encoding_failures_name_the_row(self):
        frame = pd.DataFrame({"r": ["10", "11", "vague"], "c4": ["a", "b", "a"]})
        with pytest.raises(ValueError, match="'vague' at row 2"):
            encode_table(frame, MIXED_SCHEMA)
        frame = pd.DataFrame({"r": ["10", "11"], "c4": ["a", "nope"]})
        with pytest.raises(ValueError, match="'nope' at row 1"):
            encode_table(frame, MIXED_SCHEMA)

    def test_non_finite_value_rejected_with_row(self):
        frame = pd.DataFrame({"r": ["10", "inf"], "c4": ["a", "b"]})
        with pytest.raises(ValueError, match="non-finite value at row 1"):
            encode_table(frame, MIXED_SCHEMA)


class TestConditionEncoding:
    def test_one_hot(self):
        target = TargetSpec("y", "classification", classes=("a", "b", "c"))
        assert encode_condition("b", target).tolist() == [0.0, 1.0, 0.0]

    def test_regression_midpoint(self):
        target = TargetSpec("y", "regression", min=0.0, max=10.0)
        assert encode_condition(5.0, target).tolist() == [0.5]

    def test_null_condition_regression_is_minus_one(self):
        target = TargetSpec("y", "regression", min=0.0, max=10.0)
        assert null_condition(target).tolist() == [-1.0]

    def test_null_condition_classification_is_zeros(self):
        assert null_condition(TARGET).tolist() == [0.0, 0.0]

    def test_unknown_class(self):
        with pytest.raises(ValueError, match="unknown class"):
            encode_condition("nope", TARGET)


# -- properties ---------------------------------------------------------------


@given(st.floats(min_value=10.0, max_value=20.0, allow_nan=False))
def test_continuous_round_trip_precision(v):
    decoded = decode_continuous(encode_continuous(v, CONT_RANGE), CONT_RANGE)
    assert abs(decoded - v) <= (20.0 - 10.0) * 2**-20


@given(
    st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
    st.floats(min_value=1e-3, max_value=1e6, allow_nan=False),
    st.floats(min_value=0.0, max_value=1.0),
)
def test_continuous_round_trip_any_range(lo, width, frac):
    spec = ColumnSpec("v", "continuous", min=lo, max=lo + width)
    v = lo + frac * width
    decoded = decode_continuous(encode_continuous(v, spec), spec)
    assert abs(decoded - v) <= width * 2**-20


@settings(max_examples=200)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_encode_decode_is_projection(word):
    bits = np.array([(word >> s) & 1 for s in range(31, -1, -1)], dtype=np.uint8)
    once = encode_continuous(decode_continuous(bits, CONT_RANGE), CONT_RANGE)
    twice = encode_continuous(decode_continuous(once, CONT_RANGE), CONT_RANGE)
    assert once.tolist() == twice.tolist()


@given(st.data())
def test_categorical_round_trip_property(data):
    k = data.draw(st.integers(min_value=1, max_value=40))
    categories = tuple(f"cat{i}" for i in range(k))
    spec = ColumnSpec("c", "categorical", categories=categories)
    value = data.draw(st.sampled_from(categories))
    assert decode_categorical(encode_categorical(value, spec), spec) == value


def test_width_law_random_records():
    rng = np.random.default_rng(1)
    for _ in range(50):
        v = rng.uniform(10, 20)
        c = CAT4.categories[rng.integers(0, 4)]
        assert encode_row([v, c], MIXED_SCHEMA).shape == (34,)


# -- schema inference ---------------------------------------------------------


class TestInferSchema:
    def test_four_values_categorical(self):
        frame = pd.DataFrame({"c": ["a", "b", "c", "d"], "y": ["0", "1", "0", "1"]})
        schema = infer_schema(frame, "y")
        col = schema.column("c")
        assert col.kind == "categorical"
        assert col.n_categories == 4
        assert col.bit_width == 2

    def test_numeric_column_continuous(self):
        frame = pd.DataFrame({"v": ["1.5", "2.5"], "y": ["0", "1"]})
        schema = infer_schema(frame, "y")
        col = schema.column("v")
        assert col.kind == "continuous"
        assert (col.min, col.max) == (1.5, 2.5)

    def test_hint_forces_categorical(self):
        frame = pd.DataFrame({"v": ["yes", "no"], "y": ["0", "1"]})
        schema = infer_schema(frame, "y", type_hints={"v": "categorical"})
        col = schema.column("v")
        assert col.n_categories == 2
        assert col.bit_width == 1

    def test_numeric_strings_hinted_categorical(self):
        frame = pd.DataFrame({"v": ["1", "2", "1"], "y": ["0", "1", "0"]})
        schema = infer_schema(frame, "y", type_hints={"v": "categorical"})
        assert schema.column("v").kind == "categorical"

    def test_continuous_hint_on_text_fails(self):
        frame = pd.DataFrame({"v": ["abc"], "y": ["0", ]})
        with pytest.raises(ValueError, match="hinted continuous"):
            infer_schema(frame, "y", type_hints={"v": "continuous"})

    def test_empty_table_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            infer_schema(pd.DataFrame({"a": [], "y": []}), "y")

    def test_missing_target_rejected(self):
        with pytest.raises(ValueError, match="target column"):
            infer_schema(pd.DataFrame({"a": ["1"]}), "y")

    def test_categories_sorted_lexicographically(self):
        frame = pd.DataFrame({"c": ["zeta", "alpha", "mid"], "y": ["0", "1", "0"]})
        schema = infer_schema(frame, "y")
        assert schema.column("c").categories == ("alpha", "mid", "zeta")

    def test_deterministic(self):
        frame = pd.DataFrame({"c": ["b", "a"], "v": ["1", "2"], "y": ["0", "1"]})
        assert infer_schema(frame, "y") == infer_schema(frame, "y")

    def test_target_position_round_trips_header(self):
        frame = pd.DataFrame({"a": ["1", "2"], "y": ["0", "1"], "b": ["x", "z"]})
        schema = infer_schema(frame, "y")
        assert schema.header() == ["a", "y", "b"]


class TestSchemaSerialization:
    def test_json_round_trip_full_precision(self):
        spec = ColumnSpec("v", "continuous", min=0.1, max=1 / 3)
        schema = TableSchema(columns=(spec, CAT4), target=TARGET, target_position=1)
        restored = TableSchema.from_json(schema.to_json())
        assert restored == schema
        assert restored.column("v").max == 1 / 3  # bit-exact through repr

    def test_total_bits_consistency_checked(self):
        doc = MIXED_SCHEMA.to_json_dict()
        doc["total_bits"] = 99
        with pytest.raises(ValueError, match="total_bits"):
            TableSchema.from_json_dict(doc)


class TestBinaryTableCodecEstimator:
    def test_fit_transform_inverse(self):
        frame = pd.DataFrame(
            {"r": ["10", "15", "20"], "c4": ["a", "d", "b"], "label": ["n", "p", "n"]}
        )
        codec = BinaryTableCodec(target_column="label")
        bits = codec.fit(frame).transform(frame)
        assert bits.shape == (3, codec.n_bits_)
        back = codec.inverse_transform(bits)
        assert back["c4"].tolist() == ["a", "d", "b"]

    def test_get_params_round_trip(self):
        codec = BinaryTableCodec(target_column="label", task="classification")
        params = codec.get_params()
        assert params["target_column"] == "label"
        clone = BinaryTableCodec(**params)
        assert clone.get_params() == params

    def test_not_fitted_error(self):
        from sklearn.exceptions import NotFittedError

        with pytest.raises(NotFittedError):
            BinaryTableCodec(target_column="y").transform(pd.DataFrame({"a": ["1"]}))
