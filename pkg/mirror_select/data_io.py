"""CSV and JSON input/output.

Input matrices are comma-separated, one observation per row, with an
optional header line detected by a non-numeric first row.
"""

import csv
import json
from pathlib import Path
from typing import Iterable

import numpy as np

from mirror_select.errors import ConfigError
from mirror_select.harness import ExperimentConfig, ExperimentSummary, MetricsRecord

RECORD_FIELDS = ("rep", "fdp", "power", "n_selected", "cutoff", "wall_time_ms", "status")


def _is_numeric_row(line: str) -> bool:
    try:
        [float(cell) for cell in line.strip().split(",")]
    except ValueError:
        return False
    return True


def read_matrix_csv(path: str | Path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"no such file: {path}")
    with path.open() as handle:
        first = handle.readline()
    skip = 0 if _is_numeric_row(first) else 1
    try:
        matrix = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return matrix


def read_vector_csv(path: str | Path) -> np.ndarray:
    matrix = read_matrix_csv(path)
    if matrix.shape[1] != 1 and matrix.shape[0] != 1:
        raise ConfigError(f"{path}: expected a single column, got shape {matrix.shape}")
    return matrix.reshape(-1)


def write_matrix_csv(path: str | Path, matrix: np.ndarray, prefix: str = "x") -> None:
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim == 1:
        matrix = matrix[:, None]
    header = ",".join(f"{prefix}{j}" for j in range(matrix.shape[1]))
    np.savetxt(path, matrix, delimiter=",", header=header, comments="", fmt="%.17g")


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_records_csv(path: str | Path, records: Iterable[MetricsRecord]) -> None:
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(RECORD_FIELDS)
        for record in records:
            row = record.model_dump()
            writer.writerow([_cell(row[name]) for name in RECORD_FIELDS])


def write_json(path: str | Path | None, payload: dict) -> str:
    text = json.dumps(payload, indent=2, sort_keys=True, default=str)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def write_summary_json(path: str | Path, summary: ExperimentSummary) -> None:
    Path(path).write_text(summary.model_dump_json(indent=2) + "\n")


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"no such config: {path}")
    return ExperimentConfig.model_validate_json(path.read_text())
