"""
Tests for the energy CSV and NDJSON encodings
"""

import json
import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from bipolarmhd.analysis import ENERGY_FIELDS, EnergyRecord
from bipolarmhd.errors import CheckpointFormatError
from bipolarmhd.records import (
    ENERGY_CSV_MAGIC,
    EnergyCSVWriter,
    encode_ndjson,
    read_energy_csv,
    read_ndjson,
    write_ndjson,
)
from bipolarmhd.types import Scheme


def _records(count=5):
    rng = np.random.default_rng(0)
    return [EnergyRecord(*(float(x) for x in rng.random(len(ENERGY_FIELDS)) * 10.0 ** i)) for i in range(count)]


def test_energy_csv_roundtrip(tmp_path):
    path = tmp_path / "out" / "energy.csv"
    records = _records()
    with EnergyCSVWriter(path) as writer:
        for record in records:
            writer.write(record)
    assert writer.rows == len(records)
    lines = path.read_text().splitlines()
    assert lines[0] == ENERGY_CSV_MAGIC
    assert lines[1] == ",".join(ENERGY_FIELDS)
    assert read_energy_csv(path) == records


def test_energy_csv_header_only(tmp_path):
    path = tmp_path / "energy.csv"
    EnergyCSVWriter(path).open().close()
    assert read_energy_csv(path) == []



def test_energy_csv_resume_keeps_earlier_rows(tmp_path):
    path = tmp_path / "energy.csv"
    series = [EnergyRecord(0.01 * i, *([float(i)] * (len(ENERGY_FIELDS) - 1))) for i in range(6)]
    with EnergyCSVWriter(path) as writer:
        for record in series:
            writer.write(record)

    with EnergyCSVWriter(path, resume_at=0.03) as writer:
        assert writer.kept == 3
        for record in series[3:5]:
            writer.write(record)
    assert writer.rows == 2
    assert read_energy_csv(path) == series[:5]

    # no file yet
    fresh = tmp_path / "fresh.csv"
    with EnergyCSVWriter(fresh, resume_at=0.03) as writer:
        assert writer.kept == 0
    assert read_energy_csv(fresh) == []


def test_energy_csv_bad_magic(tmp_path):
    path = tmp_path / "energy.csv"
    path.write_text("t,y\n1,2\n")
    with pytest.raises(CheckpointFormatError):
        read_energy_csv(path)


def test_energy_csv_bad_columns(tmp_path):
    path = tmp_path / "energy.csv"
    path.write_text(ENERGY_CSV_MAGIC + "\nt,y,work\n")
    with pytest.raises(CheckpointFormatError, match="columns"):
        read_energy_csv(path)


def test_ndjson_non_finite_becomes_null():
    line = encode_ndjson({"kind": "x", "a": math.nan, "b": [1.0, math.inf], "c": np.float64(2.5)})
    assert json.loads(line) == {"kind": "x", "a": None, "b": [1.0, None], "c": 2.5}
    assert "\n" not in line


def test_ndjson_numpy_and_enums():
    data = json.loads(encode_ndjson({"v": np.arange(3), "n": np.int64(4), "scheme": Scheme.IMEX_CNAB2}))
    assert data == {"v": [0, 1, 2], "n": 4, "scheme": "imex_cnab2"}


def test_ndjson_file_roundtrip(tmp_path):
    records = [{"kind": "a", "value": 1.5}, {"kind": "b", "value": None}]
    path = write_ndjson(tmp_path / "nested" / "report.ndjson", records)
    assert read_ndjson(path) == records
    assert len(path.read_text().splitlines()) == 2
