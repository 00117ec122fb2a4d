"""
Turning raw discrete observations into curves.

A raw panel holds, per unit (say a year), equispaced observations (say daily
values). Each unit is placed on [0, 1) at ``t_d = d / obs``, fitted by least
squares onto a Fourier basis, and the fit is evaluated on the target grid.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from supfts.errors import IngestionError, InvalidInputError
from supfts.grid_curves import CurveSet, Grid

__all__ = ["FourierSpec", "RawPanel", "fourier_design", "read_raw_panel", "smooth_to_curves"]

MAX_MISSING_FRACTION = 0.10


@dataclass(frozen=True)
class FourierSpec:
    n_basis: int = 49
    period: float = 1.0

    def __post_init__(self) -> None:
        if self.n_basis < 1 or self.n_basis % 2 == 0:
            raise InvalidInputError(f"n_basis must be a positive odd integer, got {self.n_basis}")
        if self.period <= 0:
            raise InvalidInputError("period must be positive")


def fourier_design(t: np.ndarray, spec: FourierSpec) -> np.ndarray:
    """Columns ``1, sin(2 pi k t / P), cos(2 pi k t / P)`` for ``k = 1..(n_basis-1)/2``."""
    t = np.asarray(t, float)
    cols = [np.ones_like(t)]
    for k in range(1, (spec.n_basis - 1) // 2 + 1):
        arg = 2.0 * np.pi * k * t / spec.period
        cols.append(np.sin(arg))
        cols.append(np.cos(arg))
    return np.column_stack(cols)


@dataclass(frozen=True, eq=False)
class RawPanel:
    """
    Per-unit observation rows; ``NaN`` marks a missing value.

    Units may have different numbers of observations (365 and 366 day years
    are both fine).
    """

    labels: tuple[str, ...]
    rows: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if len(self.labels) != len(self.rows):
            raise InvalidInputError("one label per unit is required")
        if not self.rows:
            raise IngestionError("raw panel has no units")
        rows = []
        for label, row in zip(self.labels, self.rows):
            row = np.asarray(row, float)
            if row.ndim != 1 or row.size < 2:
                raise IngestionError(f"unit {label!r}: need at least two observations")
            if np.any(np.isinf(row)):
                raise IngestionError(f"unit {label!r}: infinite observation")
            missing = np.count_nonzero(np.isnan(row))
            if missing > MAX_MISSING_FRACTION * row.size:
                raise IngestionError(
                    f"unit {label!r}: {missing} of {row.size} observations missing (more than 10%)"
                )
            rows.append(row)
        object.__setattr__(self, "rows", tuple(rows))

    @classmethod
    def from_array(cls, values, labels=None) -> RawPanel:
        values = np.asarray(values, float)
        if values.ndim != 2:
            raise InvalidInputError("expected a units x observations table")
        if labels is None:
            labels = [str(i + 1) for i in range(values.shape[0])]
        return cls(tuple(labels), tuple(values))

    @property
    def units(self) -> int:
        return len(self.rows)

    def missing_mask(self, unit: int) -> np.ndarray:
        return np.isnan(self.rows[unit])

    def scaled(self, factor: float) -> RawPanel:
        return RawPanel(self.labels, tuple(factor * r for r in self.rows))


def read_raw_panel(path: str | Path) -> RawPanel:
    """First column: unit label; remaining columns: observations, blank = missing."""
    labels, rows = [], []
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or not any(cell.strip() for cell in rec):
                continue
            label, cells = rec[0].strip(), rec[1:]
            try:
                row = [float(c) if c.strip() else np.nan for c in cells]
            except ValueError:
                raise IngestionError(f"{path}:{lineno}: non-numeric observation") from None
            labels.append(label)
            rows.append(np.array(row))
    if not rows:
        raise IngestionError(f"{path}: no units found")
    return RawPanel(tuple(labels), tuple(rows))


def smooth_to_curves(panel: RawPanel, spec: FourierSpec, grid: Grid) -> CurveSet:
    """Least-squares Fourier fit of every unit, evaluated on ``grid``."""
    at_grid = fourier_design(grid.points, spec)
    out = np.empty((panel.units, grid.size))
    for u, (label, row) in enumerate(zip(panel.labels, panel.rows)):
        if spec.n_basis > row.size:
            raise IngestionError(
                f"unit {label!r}: {spec.n_basis} basis functions but only {row.size} observations"
            )
        t = np.arange(row.size) / row.size
        keep = ~np.isnan(row)
        design = fourier_design(t[keep], spec)
        coef, _, rank, _ = np.linalg.lstsq(design, row[keep], rcond=None)
        if rank < spec.n_basis:
            raise IngestionError(f"unit {label!r}: rank-deficient Fourier design ({rank} < {spec.n_basis})")
        out[u] = at_grid @ coef
    return CurveSet(grid, out)
