"""
Data-generating processes for the simulation studies.

Errors are functional moving-average or autoregressive processes of order one
living in the span of ``D`` cubic B-splines. Innovations are
``eps_j = sum_i N_ij nu_i`` with ``N_ij ~ N(0, sigma_i^2)``, ``sigma_i = 1/i``;
the lag operator is ``kappa * Psi`` where ``Psi`` is a random ``D x D`` matrix
rescaled to unit spectral norm.

All processes are handled in coefficient space and only evaluated on the
grid at the end.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import BSpline

from supfts.errors import InvalidInputError
from supfts.grid_curves import Curve, CurveSet, Grid
from supfts.rng import RngSpec

__all__ = [
    "BSplineBasis",
    "FtsConfig",
    "MeanSpec",
    "RngSpec",
    "default_sigmas",
    "eval_mean",
    "gen_noise",
    "gen_series",
    "load_psi",
    "make_psi",
    "mean_schedule",
    "save_psi",
]

MEAN_FAMILIES = ("zero", "meanclass1", "meanclass2", "relex1", "relex2")
PROCESS_KINDS = ("fMA1", "fAR1")


def default_sigmas(D: int) -> np.ndarray:
    return 1.0 / np.arange(1, D + 1)


@dataclass(frozen=True, eq=False)
class BSplineBasis:
    """Clamped uniform B-spline basis evaluated on a grid."""

    dimension: int
    degree: int
    knots: np.ndarray
    values_on_grid: np.ndarray  # D x G
    grid: Grid

    @classmethod
    def clamped(
        cls, grid: Grid, dimension: int = 21, degree: int = 3
    ) -> BSplineBasis:
        return _clamped_basis(grid.size, dimension, degree)

    def evaluate(self, coefficients: np.ndarray) -> np.ndarray:
        """Map an ``n x D`` coefficient table to an ``n x G`` value table."""
        return np.asarray(coefficients) @ self.values_on_grid


@lru_cache(maxsize=16)
def _clamped_basis(grid_size: int, dimension: int, degree: int) -> BSplineBasis:
    if degree < 0 or dimension < degree + 1:
        raise InvalidInputError(
            f"need dimension >= degree + 1, got D={dimension}, degree={degree}"
        )
    grid = Grid.uniform(grid_size)
    inner = np.linspace(0.0, 1.0, dimension - degree + 1)
    knots = np.r_[np.zeros(degree), inner, np.ones(degree)]
    values = BSpline.design_matrix(grid.points, knots, degree).toarray().T
    values.setflags(write=False)
    knots.setflags(write=False)
    return BSplineBasis(dimension, degree, knots, values, grid)


@dataclass(frozen=True, eq=False)
class FtsConfig:
    """
    Settings of a functional MA(1) / AR(1) error process.

    ``psi`` may be left as ``None`` and supplied later through
    :meth:`with_psi`; generating a process with ``kappa != 0`` requires it.
    """

    kind: str = "fMA1"
    D: int = 21
    kappa: float = 0.5
    sigmas: np.ndarray | None = None
    psi: np.ndarray | None = None
    burn_in: int = 100
    degree: int = 3

    def __post_init__(self) -> None:
        if self.kind not in PROCESS_KINDS:
            raise InvalidInputError(f"unknown process kind {self.kind!r}")
        if self.D < 1:
            raise InvalidInputError("D must be positive")
        if not 0.0 <= self.kappa < 1.0:
            raise InvalidInputError("kappa must lie in [0, 1)")
        if self.burn_in < 0:
            raise InvalidInputError("burn_in must be non-negative")
        sig = default_sigmas(self.D) if self.sigmas is None else np.asarray(self.sigmas, float)
        if sig.shape != (self.D,) or np.any(sig < 0) or not np.all(np.isfinite(sig)):
            raise InvalidInputError("sigmas must be D non-negative finite numbers")
        object.__setattr__(self, "sigmas", sig)
        if self.psi is not None:
            psi = np.asarray(self.psi, float)
            if psi.shape != (self.D, self.D):
                raise InvalidInputError(f"psi must be {self.D}x{self.D}")
            object.__setattr__(self, "psi", psi)

    def with_psi(self, rng: RngSpec) -> FtsConfig:
        return replace(self, psi=make_psi(self.D, self.sigmas, rng))

    def basis(self, grid: Grid) -> BSplineBasis:
        return BSplineBasis.clamped(grid, self.D, self.degree)

    def to_text(self) -> str:
        lines = [
            f"kind={self.kind}",
            f"D={self.D}",
            f"kappa={self.kappa!r}",
            f"burn_in={self.burn_in}",
            f"degree={self.degree}",
            "sigmas=" + " ".join(format(s, ".17g") for s in self.sigmas),
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> FtsConfig:
        kv: dict[str, str] = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidInputError(f"config line without '=': {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            kv[key] = value
        known = {"kind", "D", "kappa", "burn_in", "degree", "sigmas"}
        unknown = set(kv) - known
        if unknown:
            raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
        try:
            kwargs = {
                "kind": kv.get("kind", "fMA1"),
                "D": int(kv.get("D", 21)),
                "kappa": float(kv.get("kappa", 0.5)),
                "burn_in": int(kv.get("burn_in", 100)),
                "degree": int(kv.get("degree", 3)),
            }
            if "sigmas" in kv:
                kwargs["sigmas"] = np.array([float(s) for s in kv["sigmas"].split()])
        except ValueError as exc:
            raise InvalidInputError(f"bad config value: {exc}") from None
        return cls(**kwargs)


def make_psi(D: int, sigmas: Sequence[float], rng: RngSpec) -> np.ndarray:
    """Random ``D x D`` matrix with entry std ``sigma_i * sigma_j`` and unit spectral norm."""
    if D < 1:
        raise InvalidInputError("D must be positive")
    sig = np.asarray(sigmas, float)
    gen = rng.generator()
    raw = gen.standard_normal((D, D)) * np.outer(sig, sig)
    return raw / np.linalg.norm(raw, 2)


def save_psi(psi: np.ndarray, path: str | Path) -> None:
    np.savetxt(path, psi, delimiter=",", fmt="%.17g")


def load_psi(path: str | Path) -> np.ndarray:
    psi = np.loadtxt(path, delimiter=",", ndmin=2)
    if psi.shape[0] != psi.shape[1]:
        raise InvalidInputError(f"{path}: psi must be square, got {psi.shape}")
    return psi


def _innovations(gen: np.random.Generator, n: int, sigmas: np.ndarray) -> np.ndarray:
    return gen.standard_normal((n, sigmas.size)) * sigmas


def gen_noise(
    n: int,
    basis: BSplineBasis,
    sigmas: Sequence[float] | None,
    rng: RngSpec,
) -> CurveSet:
    """``n`` independent innovation curves on the basis grid."""
    if n < 1:
        raise InvalidInputError("n must be positive")
    sig = default_sigmas(basis.dimension) if sigmas is None else np.asarray(sigmas, float)
    coef = _innovations(rng.generator(), n, sig)
    return CurveSet(basis.grid, basis.evaluate(coef))


def series_coefficients(n: int, cfg: FtsConfig, gen: np.random.Generator) -> np.ndarray:
    """Coefficient rows ``eta_1..eta_n`` of the configured process."""
    if n < 1:
        raise InvalidInputError("n must be positive")
    if cfg.kappa != 0.0 and cfg.psi is None:
        raise InvalidInputError("psi is required when kappa != 0")
    if cfg.kind == "fMA1":
        eps = _innovations(gen, n + 1, cfg.sigmas)
        if cfg.kappa == 0.0:
            return eps[1:]
        return eps[1:] + cfg.kappa * (eps[:-1] @ cfg.psi.T)
    eps = _innovations(gen, cfg.burn_in + n, cfg.sigmas)
    if cfg.kappa == 0.0:
        return eps[cfg.burn_in :]
    op = cfg.kappa * cfg.psi.T
    out = np.empty_like(eps)
    state = np.zeros(cfg.D)
    for i in range(eps.shape[0]):
        state = state @ op + eps[i]
        out[i] = state
    return out[cfg.burn_in :]


def gen_series(
    n: int,
    cfg: FtsConfig,
    mean: CurveSet | Sequence[Curve],
    rng: RngSpec,
    grid: Grid | None = None,
) -> CurveSet:
    """
    Generate ``n`` curves ``mean[i] + eta_i``.

    Parameters
    ----------
    n : int
        Number of curves.
    cfg : FtsConfig
        Process settings, including ``psi`` unless ``kappa == 0``.
    mean : CurveSet or sequence of Curve
        Mean schedule of length ``n``; a change-point schedule is just a
        schedule whose rows switch value once.
    rng : RngSpec
        Stream for the innovations.
    grid : Grid, optional
        Defaults to the grid of ``mean``.

    Notes
    -----
    fMA1 draws ``n + 1`` innovations, the first one being ``eps_0``. fAR1
    starts from zero and discards ``cfg.burn_in`` steps.
    """
    if not isinstance(mean, CurveSet):
        mean = CurveSet.from_curves(mean)
    if mean.n != n:
        raise InvalidInputError(f"mean schedule has {mean.n} rows, expected {n}")
    grid = mean.grid if grid is None else grid
    if grid != mean.grid:
        raise InvalidInputError("mean schedule lives on a different grid")
    basis = cfg.basis(grid)
    coef = series_coefficients(n, cfg, rng.generator())
    return CurveSet(grid, mean.values + basis.evaluate(coef))


def mean_schedule(mu1: Curve, mu2: Curve, n: int, s_star: float = 0.5) -> CurveSet:
    """Rows ``1..floor(n s*)`` equal ``mu1``, the rest ``mu2``."""
    if mu1.grid != mu2.grid:
        raise InvalidInputError("mean functions live on different grids")
    k = int(np.floor(n * s_star))
    rows = np.empty((n, mu1.grid.size))
    rows[:k] = mu1.values
    rows[k:] = mu2.values
    return CurveSet(mu1.grid, rows)


@dataclass(frozen=True)
class MeanSpec:
    """
    Closed-form mean function families.

    ``param`` is the slope ``a`` for ``meanclass1`` and the exponent ``k``
    for ``meanclass2``; the other families ignore it.
    """

    family: str = "zero"
    param: float = 0.0
    amplitude: float = 1.0

    def __post_init__(self) -> None:
        if self.family not in MEAN_FAMILIES:
            raise InvalidInputError(f"unknown mean family {self.family!r}")
        if self.family == "meanclass2" and (self.param < 1 or int(self.param) != self.param):
            raise InvalidInputError("meanclass2 needs an integer k >= 1")

    def __call__(self, t) -> np.ndarray:
        return self.amplitude * _FAMILY_FUNCS[self.family](np.asarray(t, float), self.param)


def _meanclass2_norm(k: int) -> float:
    antideriv = (Polynomial([1.0, -1.0, 1.0]) ** k).integ()
    return float(antideriv(1.0) - antideriv(0.0))


def _relex1(t: np.ndarray, _param) -> np.ndarray:
    return np.select(
        [t <= 0.2, t <= 0.3, t <= 0.7, t <= 0.8],
        [0.5 * t, np.full_like(t, 0.1), -0.5 * t + 0.25, np.full_like(t, -0.1)],
        0.5 * t - 0.5,
    )


def _relex2(t: np.ndarray, _param) -> np.ndarray:
    return np.select(
        [t <= 0.25, t <= 0.75],
        [0.4 * t, np.full_like(t, 0.1)],
        -0.4 * t + 0.4,
    )


_FAMILY_FUNCS = {
    "zero": lambda t, _p: np.zeros_like(t),
    "meanclass1": lambda t, a: a * t * (1.0 - t),
    "meanclass2": lambda t, k: 0.1 * (1.0 - t * (1.0 - t)) ** int(k) / _meanclass2_norm(int(k)),
    "relex1": _relex1,
    "relex2": _relex2,
}


def eval_mean(spec: MeanSpec, grid: Grid) -> Curve:
    return Curve(grid, spec(grid.points))
