"""Trajectory CSV read/write.

Format: one header row "t,<label1>,...,<labeln>", one row per node,
comma-separated decimal text (shortest round-trip, always >= full double
precision via %.17g), LF line endings, no trailing comma.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError
from .problem import Trajectory

__all__ = ["write_trajectory", "read_trajectory", "default_labels"]


def default_labels(dimension: int) -> list[str]:
    return [f"u{j}" for j in range(1, dimension + 1)]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trajectory(path, trajectory: Trajectory, labels=None) -> None:
    labels = list(labels) if labels is not None else default_labels(trajectory.dimension)
    if len(labels) != trajectory.dimension:
        raise InputError(
            f"{len(labels)} labels for dimension {trajectory.dimension}")
    times = trajectory.grid.times()
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(["t"] + labels) + "\n")
        for k in range(trajectory.grid.n_nodes + 1):
            row = [_fmt(times[k])] + [_fmt(v) for v in trajectory.values[k]]
            fh.write(",".join(row) + "\n")


def read_trajectory(path) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Parse a trajectory CSV; returns (times, values, value-column labels)."""
    with open(path, "r", newline=None) as fh:
        lines = [line.rstrip("\n").rstrip("\r") for line in fh if line.strip()]
    if not lines:
        raise InputError(f"{path}: empty CSV")
    header = lines[0].split(",")
    if len(header) < 2 or header[0] != "t":
        raise InputError(f"{path}: header must be 't,<labels...>', got {lines[0]!r}")
    labels = header[1:]
    times = np.empty(len(lines) - 1)
    values = np.empty((len(lines) - 1, len(labels)))
    for i, line in enumerate(lines[1:]):
        parts = line.split(",")
        if len(parts) != len(header):
            raise InputError(
                f"{path}: row {i + 1} has {len(parts)} fields, expected {len(header)}")
        try:
            times[i] = float(parts[0])
            for c in range(len(labels)):
                values[i, c] = float(parts[c + 1])
        except ValueError as exc:
            raise InputError(f"{path}: row {i + 1}: {exc}") from None
    return times, values, labels
