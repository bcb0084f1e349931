"""Parsers for the run-directory file formats."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class RunDataError(ValueError):
    """Raised when a run directory is missing files or malformed."""


@dataclass
class ProbabilityTable:
    t: np.ndarray
    probs: np.ndarray  # (n_times, n_blocks)
    trace: np.ndarray
    energy: np.ndarray
    sigma_min: np.ndarray


@dataclass
class DensityTable:
    x: np.ndarray
    t: np.ndarray
    density: np.ndarray  # (n_times, n_points)


def load_meta(run_dir) -> dict:
    path = Path(run_dir) / "meta.json"
    if not path.exists():
        raise RunDataError(f"missing meta.json in {run_dir}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise RunDataError(f"malformed meta.json: {err}") from err


def load_probabilities(run_dir) -> ProbabilityTable:
    path = Path(run_dir) / "probabilities.csv"
    if not path.exists():
        raise RunDataError(f"missing probabilities.csv in {run_dir}")
    lines = path.read_text().splitlines()
    if len(lines) < 2:
        raise RunDataError("probabilities.csv holds no records")
    header = lines[0].split(",")
    expected_tail = ["trace", "energy_re", "sigma_min"]
    if header[0] != "t" or header[-3:] != expected_tail:
        raise RunDataError(f"unexpected probabilities.csv header: {lines[0]!r}")
    n_blocks = len(header) - 4
    try:
        data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    except ValueError as err:
        raise RunDataError(f"malformed probabilities.csv: {err}") from err
    if data.shape[1] != len(header):
        raise RunDataError("probabilities.csv row width does not match its header")
    return ProbabilityTable(
        t=data[:, 0],
        probs=data[:, 1 : 1 + n_blocks],
        trace=data[:, -3],
        energy=data[:, -2],
        sigma_min=data[:, -1],
    )


def load_density(run_dir) -> DensityTable:
    path = Path(run_dir) / "density.csv"
    if not path.exists():
        raise RunDataError(f"missing density.csv in {run_dir}")
    lines = path.read_text().splitlines()
    if len(lines) < 2:
        raise RunDataError("density.csv holds no records")
    try:
        x = np.array([float(v) for v in lines[0].split(",")])
        rows = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    except ValueError as err:
        raise RunDataError(f"malformed density.csv: {err}") from err
    if rows.shape[1] != x.size + 1:
        raise RunDataError("density.csv rows do not match the node row")
    return DensityTable(x=x, t=rows[:, 0], density=rows[:, 1:])
