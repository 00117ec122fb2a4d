"""
Grid representation of continuous functions on [0, 1].

Every curve lives on a uniform grid ``t_i = i / (G - 1)``. The sup-norm of a
curve is the maximum of its absolute values over the grid. Curve arithmetic
never resamples: operands must share the same grid.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from supfts.errors import InvalidInputError

__all__ = [
    "CANONICAL_GRID_SIZE",
    "Curve",
    "CurveSet",
    "Grid",
    "argmax_abs",
    "diff",
    "mean_curve",
    "partial_mean",
    "read_curveset_csv",
    "scale",
    "shift",
    "sup_norm",
    "write_curveset_csv",
]

CANONICAL_GRID_SIZE = 101

_UNIFORM_RTOL = 1e-12


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=float)
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform grid of ``size`` points spanning [0, 1]."""

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise InvalidInputError("a grid needs at least two points")
        if not np.all(np.isfinite(pts)):
            raise InvalidInputError("grid points must be finite")
        if pts[0] != 0.0 or pts[-1] != 1.0:
            raise InvalidInputError("grid must start at 0 and end at 1")
        steps = np.diff(pts)
        if np.any(steps <= 0):
            raise InvalidInputError("grid points must be strictly increasing")
        h = 1.0 / (pts.size - 1)
        if np.max(np.abs(steps - h)) > _UNIFORM_RTOL:
            raise InvalidInputError("grid spacing is not uniform")
        # snap to i / (G - 1) so that grids read from text compare equal
        object.__setattr__(self, "points", _frozen(np.arange(pts.size) / (pts.size - 1)))

    @classmethod
    def uniform(cls, size: int = CANONICAL_GRID_SIZE) -> Grid:
        if size < 2:
            raise InvalidInputError(f"grid size must be >= 2, got {size}")
        return cls(np.arange(size) / (size - 1))

    @property
    def size(self) -> int:
        return int(self.points.size)

    def __len__(self) -> int:
        return self.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Grid):
            return NotImplemented
        return self.size == other.size

    def __hash__(self) -> int:
        return hash(self.size)

    def index_of(self, t: float) -> int:
        """Index of the grid point closest to ``t``."""
        return int(np.argmin(np.abs(self.points - t)))


def _check_finite(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise InvalidInputError(f"{what} contains non-finite values")


@dataclass(frozen=True, eq=False)
class Curve:
    """Values of a continuous function on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.size,):
            raise InvalidInputError(
                f"curve has {vals.shape} values, grid has {self.grid.size} points"
            )
        _check_finite(vals, "curve")
        object.__setattr__(self, "values", _frozen(vals))

    @classmethod
    def zeros(cls, grid: Grid) -> Curve:
        return cls(grid, np.zeros(grid.size))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> Curve:
        return cls(grid, np.full(grid.size, float(value)))

    @classmethod
    def from_function(cls, grid: Grid, func) -> Curve:
        return cls(grid, np.asarray(func(grid.points), dtype=float))

    def __sub__(self, other: Curve) -> Curve:
        return diff(self, other)

    def __add__(self, other: Curve) -> Curve:
        _same_grid(self.grid, other.grid)
        return Curve(self.grid, self.values + other.values)

    def __neg__(self) -> Curve:
        return scale(self, -1.0)


@dataclass(frozen=True, eq=False)
class CurveSet:
    """An ordered collection of ``n`` curves stored as an ``n x G`` table."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] < 1:
            raise InvalidInputError("a curve set needs at least one row")
        if vals.shape[1] != self.grid.size:
            raise InvalidInputError(
                f"rows have {vals.shape[1]} values, grid has {self.grid.size} points"
            )
        _check_finite(vals, "curve set")
        object.__setattr__(self, "values", _frozen(vals))

    @classmethod
    def from_curves(cls, curves: Iterable[Curve]) -> CurveSet:
        curves = list(curves)
        if not curves:
            raise InvalidInputError("a curve set needs at least one row")
        grid = curves[0].grid
        for c in curves[1:]:
            _same_grid(grid, c.grid)
        return cls(grid, np.vstack([c.values for c in curves]))

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    def __len__(self) -> int:
        return self.n

    def row(self, i: int) -> Curve:
        """Row ``i`` (0-based) as a :class:`Curve`."""
        return Curve(self.grid, self.values[i])

    def __iter__(self):
        for i in range(self.n):
            yield self.row(i)


def _same_grid(a: Grid, b: Grid) -> None:
    if a != b:
        raise InvalidInputError(
            f"grid mismatch: {a.size} points vs {b.size} points"
        )


def sup_norm(c: Curve) -> float:
    """Maximum absolute value of ``c`` over its grid."""
    vals = np.asarray(c.values)
    _check_finite(vals, "curve")
    return float(np.max(np.abs(vals)))


def argmax_abs(c: Curve) -> tuple[int, float]:
    """Smallest grid index where ``|c|`` is maximal, and the signed value there."""
    idx = int(np.argmax(np.abs(c.values)))
    return idx, float(c.values[idx])


def mean_curve(s: CurveSet) -> Curve:
    if s.n < 1:
        raise InvalidInputError("cannot average an empty curve set")
    return Curve(s.grid, s.values.mean(axis=0))


def partial_mean(s: CurveSet, start: int, stop: int) -> Curve:
    """
    Mean of rows ``start..stop`` using 1-based inclusive indices.

    Parameters
    ----------
    s : CurveSet
    start, stop : int
        Must satisfy ``1 <= start <= stop <= s.n``.
    """
    if not (1 <= start <= stop <= s.n):
        raise InvalidInputError(
            f"invalid row range {start}..{stop} for a set of {s.n} curves"
        )
    return Curve(s.grid, s.values[start - 1 : stop].mean(axis=0))


def diff(a: Curve, b: Curve) -> Curve:
    _same_grid(a.grid, b.grid)
    return Curve(a.grid, a.values - b.values)


def scale(a: Curve, s: float) -> Curve:
    return Curve(a.grid, s * a.values)


def shift(a: Curve, s: float) -> Curve:
    return Curve(a.grid, a.values + s)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_curveset_csv(s: CurveSet, path: str | Path) -> None:
    """Write ``s`` with a header row of grid points and one row per curve."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([_fmt(t) for t in s.grid.points])
        for row in s.values:
            writer.writerow([_fmt(v) for v in row])


def read_curveset_csv(path: str | Path) -> CurveSet:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(cell.strip() for cell in r)]
    if len(rows) < 2:
        raise InvalidInputError(f"{path}: expected a header row and at least one curve")
    try:
        header = np.array([float(x) for x in rows[0]])
        body = np.array([[float(x) for x in r] for r in rows[1:]])
    except ValueError as exc:
        raise InvalidInputError(f"{path}: malformed number ({exc})") from None
    if body.ndim != 2 or body.shape[1] != header.size:
        raise InvalidInputError(f"{path}: rows do not all match the header width")
    grid = Grid(header)
    return CurveSet(grid, body)
