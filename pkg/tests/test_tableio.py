"""CSV ingestion and run-management helpers."""

import json

import pandas as pd
import pytest

from bitdiff.tableio import load_csv, run_lock, write_csv_atomic, write_json_atomic, write_manifest


class TestLoadCsv:
    def test_loads_as_strings(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,b\n1,x\n2.5,y\n")
        frame = load_csv(path)
        assert frame["a"].tolist() == ["1", "2.5"]

    def test_quoted_fields(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text('a,b\n"hello, world",2\n')
        frame = load_csv(path)
        assert frame["a"].tolist() == ["hello, world"]

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_csv(tmp_path / "absent.csv")

    def test_empty_table(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,b\n")
        with pytest.raises(ValueError, match="empty"):
            load_csv(path)

    def test_empty_cell_preserved_not_nan(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,b\n1,\n")
        frame = load_csv(path)
        assert frame["b"].tolist() == [""]


class TestAtomicWrites:
    def test_csv_no_temp_left(self, tmp_path):
        path = tmp_path / "out.csv"
        write_csv_atomic(pd.DataFrame({"a": [1]}), path)
        assert [p.name for p in tmp_path.iterdir()] == ["out.csv"]

    def test_json_round_trip(self, tmp_path):
        path = tmp_path / "out.json"
        write_json_atomic({"k": [1, 2]}, path)
        assert json.loads(path.read_text()) == {"k": [1, 2]}


class TestManifest:
    def test_records_hashes_and_seeds(self, tmp_path):
        data = tmp_path / "d.csv"
        data.write_text("a\n1\n")
        path = write_manifest(tmp_path, "train", {"lr": 1e-4}, {"train": 3}, {"data": data})
        doc = json.loads(path.read_text())
        assert doc["command"] == "train"
        assert doc["seeds"] == {"train": 3}
        assert len(doc["input_sha256"]["data"]) == 64

    def test_missing_inputs_skipped(self, tmp_path):
        path = write_manifest(tmp_path, "x", {}, {}, {"gone": tmp_path / "nope.csv"})
        assert json.loads(path.read_text())["input_sha256"] == {}


class TestRunLock:
    def test_lock_lifecycle(self, tmp_path):
        out = tmp_path / "run"
        with run_lock(out):
            assert (out / "LOCK").exists()
            with pytest.raises(RuntimeError, match="locked"):
                with run_lock(out):
                    pass
        assert not (out / "LOCK").exists()

    def test_lock_released_on_error(self, tmp_path):
        out = tmp_path / "run"
        with pytest.raises(RuntimeError, match="boom"):
            with run_lock(out):
                raise RuntimeError("boom")
        assert not (out / "LOCK").exists()
