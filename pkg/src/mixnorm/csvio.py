"""Text formats shared by every CLI-facing piece.

Matrices are headerless comma-separated values, one row per line; vectors
are a single column (one value per line), though readers also accept a
single comma-separated row.  Group files hold one group size per line.
"""

from __future__ import annotations

import re

import numpy as np

from .errors import DimensionError, InputError
from .model import GroupPartition


def read_matrix(path) -> np.ndarray:
    try:
        M = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except (ValueError, OSError) as exc:
        raise InputError(f"could not read matrix from {path}: {exc}") from exc
    return M


def read_vector(path) -> np.ndarray:
    try:
        v = np.loadtxt(path, delimiter=",", dtype=np.float64)
    except (ValueError, OSError) as exc:
        raise InputError(f"could not read vector from {path}: {exc}") from exc
    return np.atleast_1d(v).ravel()


def read_group_sizes(path) -> GroupPartition:
    try:
        raw = np.loadtxt(path, dtype=np.int64, ndmin=1)
    except (ValueError, OSError) as exc:
        raise InputError(f"could not read group sizes from {path}: {exc}") from exc
    try:
        return GroupPartition(tuple(int(s) for s in raw))
    except DimensionError as exc:
        raise InputError(f"bad group sizes in {path}: {exc}") from exc


def write_matrix(path, M: np.ndarray) -> None:
    np.savetxt(path, np.asarray(M), delimiter=",", fmt="%.17g")


def write_vector(path, v: np.ndarray) -> None:
    np.savetxt(path, np.asarray(v).reshape(-1, 1), delimiter=",", fmt="%.17g")


def write_group_sizes(path, partition: GroupPartition) -> None:
    np.savetxt(path, np.asarray(partition.sizes, dtype=np.int64).reshape(-1, 1), fmt="%d")


def parse_vector_text(text: str) -> np.ndarray:
    """Parse '3,4' / whitespace- or newline-separated numbers from the CLI."""
    tokens = [t for t in re.split(r"[,\s]+", text.strip()) if t]
    if not tokens:
        raise InputError("empty vector input")
    try:
        return np.array([float(t) for t in tokens], dtype=np.float64)
    except ValueError as exc:
        raise InputError(f"could not parse vector input: {exc}") from exc


def format_vector_line(v: np.ndarray) -> str:
    """Single-line comma form used by the prox subcommand."""
    return ",".join(repr(float(x)) for x in np.asarray(v).ravel())
