"""
Text encodings of run results: the energy CSV and NDJSON report lines
"""

import csv
import json
import logging
import math
import os
from pathlib import Path
from typing import Any, Dict, IO, Iterable, List, Optional, Union

import numpy as np

from .analysis import ENERGY_FIELDS, EnergyRecord
from .errors import CheckpointFormatError

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]

ENERGY_CSV_VERSION = 1
ENERGY_CSV_MAGIC = f"# bipolarmhd energy v{ENERGY_CSV_VERSION}"


def _energy_row(record: EnergyRecord) -> List[str]:
    return [repr(float(getattr(record, name))) for name in ENERGY_FIELDS]


class EnergyCSVWriter:
    """
    Appends EnergyRecords to a CSV file.

    The first line is a version comment, the second the column header in
    ENERGY_FIELDS order. Floats are written with repr so a read returns the
    same values exactly.

    With resume_at set, rows of an existing file with t < resume_at are kept
    and the rest replaced, so a resumed run continues the series.
    """

    def __init__(self, path: PathLike, resume_at: Optional[float] = None):
        self.path = Path(path)
        self.resume_at = resume_at
        self.rows = 0
        self.kept = 0
        self._handle: Optional[IO[str]] = None
        self._writer = None

    def _earlier_rows(self) -> List[EnergyRecord]:
        if self.resume_at is None or not self.path.exists():
            return []
        cutoff = self.resume_at - 1e-12 * max(1.0, abs(self.resume_at))
        return [record for record in read_energy_csv(self.path) if record.t < cutoff]

    def open(self) -> "EnergyCSVWriter":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        earlier = self._earlier_rows()
        self._handle = open(self.path, "w", newline="", encoding="utf-8")
        self._handle.write(ENERGY_CSV_MAGIC + "\n")
        self._writer = csv.writer(self._handle, lineterminator="\n")
        self._writer.writerow(ENERGY_FIELDS)
        for record in earlier:
            self._writer.writerow(_energy_row(record))
        self.kept = len(earlier)
        if earlier:
            logger.info(f"Energy CSV {self.path}: kept {self.kept} rows before t={self.resume_at:.6g}")
        return self

    def write(self, record: EnergyRecord) -> None:
        if self._writer is None:
            self.open()
        self._writer.writerow(_energy_row(record))
        self.rows += 1

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None
            self._writer = None
            logger.debug(f"Energy CSV closed: {self.path} ({self.rows} rows)")

    def __enter__(self) -> "EnergyCSVWriter":
        return self.open()

    def __exit__(self, *exc) -> None:
        self.close()


def read_energy_csv(path: PathLike) -> List[EnergyRecord]:
    """
    Raises:
        CheckpointFormatError: missing version line or unexpected columns
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as handle:
        first = handle.readline().rstrip("\n")
        if first != ENERGY_CSV_MAGIC:
            raise CheckpointFormatError(f"{path}: expected {ENERGY_CSV_MAGIC!r}, got {first!r}")
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(header) != ENERGY_FIELDS:
            raise CheckpointFormatError(f"{path}: unexpected columns {header}")
        return [
            EnergyRecord(**{name: float(value) for name, value in zip(ENERGY_FIELDS, row)})
            for row in reader
            if row
        ]


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {key: _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return value


def encode_ndjson(record: Dict[str, Any]) -> str:
    """One JSON object per line; non-finite floats become null"""
    return json.dumps(_jsonable(record), allow_nan=False)


def write_ndjson(path: PathLike, records: Iterable[Dict[str, Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(encode_ndjson(record) + "\n")
    return path


def read_ndjson(path: PathLike) -> List[Dict[str, Any]]:
    with open(path, encoding="utf-8") as handle:
        return [json.loads(line) for line in handle if line.strip()]
