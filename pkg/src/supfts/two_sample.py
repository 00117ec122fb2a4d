"""
Two-sample inference for mean functions under the sup-norm.

The statistic is ``d_hat = ||mean(X) - mean(Y)||``. Its null distribution is
approximated by a multiplier block bootstrap: centred moving-block sums of
each sample are weighted by independent standard normal multipliers, giving
``R`` bootstrap processes on the grid. From these processes the module
builds

* the classical test of ``mu1 == mu2``,
* a simultaneous confidence band for ``mu1 - mu2``,
* the test of ``||mu1 - mu2|| <= delta`` against ``> delta``, which restricts
  the bootstrap maxima to estimated extremal sets of the mean difference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from supfts.errors import InvalidInputError
from supfts.grid_curves import Curve, CurveSet, mean_curve
from supfts.rng import RngSpec

__all__ = [
    "Band",
    "BootConfig2S",
    "ExtremalSets",
    "TestReport",
    "TwoSampleData",
    "block_centered_sums",
    "boot_processes_2s",
    "bootstrap_p_value",
    "classical_test_2s",
    "confidence_band_2s",
    "default_c_2s",
    "dhat_infty",
    "empirical_quantile",
    "extremal_masks",
    "extremal_sets_2s",
    "relevant_test_2s",
]


@dataclass(frozen=True, eq=False)
class TwoSampleData:
    x: CurveSet
    y: CurveSet

    def __post_init__(self) -> None:
        if self.x.grid != self.y.grid:
            raise InvalidInputError(
                f"samples live on different grids ({self.x.grid.size} vs {self.y.grid.size} points)"
            )
        if self.x.n < 2 or self.y.n < 2:
            raise InvalidInputError("each sample needs at least two curves")

    @property
    def m(self) -> int:
        return self.x.n

    @property
    def n(self) -> int:
        return self.y.n

    @property
    def grid(self):
        return self.x.grid

    def mean_difference(self) -> Curve:
        return mean_curve(self.x) - mean_curve(self.y)


@dataclass(frozen=True)
class BootConfig2S:
    R: int = 200
    l1: int = 2
    l2: int = 2
    rng: RngSpec = field(default_factory=lambda: RngSpec(0))

    def __post_init__(self) -> None:
        if self.R < 1:
            raise InvalidInputError("R must be positive")
        if self.l1 < 1 or self.l2 < 1:
            raise InvalidInputError("block lengths must be positive")

    def check(self, d: TwoSampleData) -> None:
        if self.l1 > d.m:
            raise InvalidInputError(f"block length l1={self.l1} exceeds m={d.m}")
        if self.l2 > d.n:
            raise InvalidInputError(f"block length l2={self.l2} exceeds n={d.n}")


@dataclass(frozen=True, eq=False)
class ExtremalSets:
    e_plus: np.ndarray
    e_minus: np.ndarray
    threshold: float

    def __post_init__(self) -> None:
        for name in ("e_plus", "e_minus"):
            mask = np.asarray(getattr(self, name), dtype=bool)
            mask.setflags(write=False)
            object.__setattr__(self, name, mask)

    @property
    def empty(self) -> bool:
        return not (self.e_plus.any() or self.e_minus.any())


@dataclass(frozen=True, eq=False)
class TestReport:
    """
    Outcome of a bootstrap test.

    ``reject`` is ``statistic > delta + quantile / scale``; ``scale`` is the
    square root of the total sample size. ``p_value`` counts bootstrap
    statistics at least as extreme as ``sqrt(N) * (statistic - delta)``.
    """

    __test__ = False  # not a pytest class

    kind: str
    statistic: float
    delta: float
    alpha: float
    quantile: float
    scale: float
    reject: bool
    p_value: float
    boot_stats: np.ndarray
    seed: str = ""
    blocks: tuple[int, ...] = ()
    extremal: ExtremalSets | None = None

    @property
    def R(self) -> int:
        return int(self.boot_stats.size)

    @property
    def critical_value(self) -> float:
        return self.delta + self.quantile / self.scale


@dataclass(frozen=True, eq=False)
class Band:
    lower: Curve
    upper: Curve
    alpha: float
    half_width: float
    center: Curve

    def contains(self, mu: Curve) -> bool:
        """Whether ``mu`` lies inside the band at every grid point."""
        return bool(
            np.all(self.lower.values <= mu.values) and np.all(mu.values <= self.upper.values)
        )


def dhat_infty(d: TwoSampleData) -> float:
    """Sup-norm distance between the two sample means."""
    return float(np.max(np.abs(d.x.values.mean(axis=0) - d.y.values.mean(axis=0))))


def block_centered_sums(values: np.ndarray, l: int) -> np.ndarray:
    """
    Rows ``(sum_{j=k}^{k+l-1} X_j - (l/n) sum_j X_j) / sqrt(l)`` for ``k = 1..n-l+1``.
    """
    n = values.shape[0]
    if not 1 <= l <= n:
        raise InvalidInputError(f"block length {l} must lie in [1, {n}]")
    csum = np.concatenate([np.zeros((1, values.shape[1])), np.cumsum(values, axis=0)])
    blocks = csum[l:] - csum[:-l]
    return (blocks - (l / n) * csum[-1]) / math.sqrt(l)


def _draw_multipliers(cfg: BootConfig2S, kx: int, ky: int):
    # one stream per call; row r holds replicate r, so any split over
    # replicates reproduces the sequential draws exactly
    gen = cfg.rng.generator()
    return gen.standard_normal((cfg.R, kx)), gen.standard_normal((cfg.R, ky))


def boot_processes_2s(
    d: TwoSampleData,
    cfg: BootConfig2S,
    multipliers: tuple[np.ndarray, np.ndarray] | None = None,
) -> np.ndarray:
    """
    Bootstrap processes on the grid, shape ``(R, G)``.

    Parameters
    ----------
    d : TwoSampleData
    cfg : BootConfig2S
    multipliers : pair of arrays, optional
        Explicit ``(xi, zeta)`` of shapes ``(R, m-l1+1)`` and ``(R, n-l2+1)``
        used instead of drawing from ``cfg.rng``.
    """
    cfg.check(d)
    zx = block_centered_sums(d.x.values, cfg.l1)
    zy = block_centered_sums(d.y.values, cfg.l2)
    if multipliers is None:
        xi, zeta = _draw_multipliers(cfg, zx.shape[0], zy.shape[0])
    else:
        xi, zeta = (np.asarray(a, float) for a in multipliers)
        if xi.shape != (cfg.R, zx.shape[0]) or zeta.shape != (cfg.R, zy.shape[0]):
            raise InvalidInputError("multiplier arrays have the wrong shape")
    return math.sqrt(d.m + d.n) * (xi @ zx / d.m + zeta @ zy / d.n)


def empirical_quantile(values, alpha: float) -> float:
    """The ``floor(R (1 - alpha))``-th smallest value, clamped to ``[1, R]``."""
    vals = np.asarray(values, float).ravel()
    if vals.size == 0:
        raise InvalidInputError("cannot take a quantile of no values")
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")
    R = vals.size
    # guard against 100 * 0.95 = 94.999... style rounding
    k = math.floor(R * (1.0 - alpha) + 1e-9)
    k = min(max(k, 1), R)
    return float(np.partition(vals, k - 1)[k - 1])


def bootstrap_p_value(boot_stats: np.ndarray, observed: float) -> float:
    """``(1 + #{boot >= observed}) / (R + 1)``."""
    boot_stats = np.asarray(boot_stats)
    return float((1 + np.count_nonzero(boot_stats >= observed)) / (boot_stats.size + 1))


def build_report(
    kind: str,
    statistic: float,
    delta: float,
    alpha: float,
    boot_stats: np.ndarray,
    scale: float,
    seed: str,
    blocks: tuple[int, ...],
    extremal: ExtremalSets | None = None,
) -> TestReport:
    q = empirical_quantile(boot_stats, alpha)
    reject = statistic > delta + q / scale
    p = bootstrap_p_value(boot_stats, scale * (statistic - delta))
    boot_stats = np.array(boot_stats, float)
    boot_stats.setflags(write=False)
    return TestReport(
        kind=kind,
        statistic=float(statistic),
        delta=float(delta),
        alpha=float(alpha),
        quantile=q,
        scale=float(scale),
        reject=bool(reject),
        p_value=p,
        boot_stats=boot_stats,
        seed=seed,
        blocks=blocks,
        extremal=extremal,
    )


def classical_test_2s(
    d: TwoSampleData,
    cfg: BootConfig2S,
    alpha: float = 0.05,
    multipliers: tuple[np.ndarray, np.ndarray] | None = None,
) -> TestReport:
    """Bootstrap test of ``mu1 == mu2``: reject if ``d_hat > q / sqrt(m + n)``."""
    boot = boot_processes_2s(d, cfg, multipliers)
    stats = np.max(np.abs(boot), axis=1)
    return build_report(
        "two-sample-classical",
        dhat_infty(d),
        0.0,
        alpha,
        stats,
        math.sqrt(d.m + d.n),
        cfg.rng.describe(),
        (cfg.l1, cfg.l2),
    )


def confidence_band_2s(
    d: TwoSampleData,
    cfg: BootConfig2S,
    alpha: float = 0.05,
    multipliers: tuple[np.ndarray, np.ndarray] | None = None,
) -> Band:
    boot = boot_processes_2s(d, cfg, multipliers)
    return band_from_boot(d.mean_difference(), np.max(np.abs(boot), axis=1), alpha, d.m + d.n)


def band_from_boot(center: Curve, sup_stats: np.ndarray, alpha: float, total: int) -> Band:
    half = empirical_quantile(sup_stats, alpha) / math.sqrt(total)
    return Band(
        lower=Curve(center.grid, center.values - half),
        upper=Curve(center.grid, center.values + half),
        alpha=float(alpha),
        half_width=half,
        center=center,
    )


def default_c_2s(m: int, n: int) -> float:
    return 0.1 * math.log(m + n)


def extremal_masks(diff: np.ndarray, dhat: float, cut: float) -> ExtremalSets:
    """Masks ``{+-diff >= dhat - cut}``."""
    level = dhat - cut
    return ExtremalSets(diff >= level, -diff >= level, float(cut))


def extremal_sets_2s(d: TwoSampleData, c: float | None = None) -> ExtremalSets:
    """
    Estimated extremal sets of the mean difference.

    A grid point belongs to ``e_plus`` (``e_minus``) when the difference
    (its negative) is within ``c / sqrt(m + n)`` of ``d_hat``. The stored
    ``threshold`` is that cut ``c / sqrt(m + n)``.
    """
    if c is None:
        c = default_c_2s(d.m, d.n)
    if c <= 0:
        raise InvalidInputError("threshold constant c must be positive")
    diff = d.x.values.mean(axis=0) - d.y.values.mean(axis=0)
    dhat = float(np.max(np.abs(diff)))
    return extremal_masks(diff, dhat, c / math.sqrt(d.m + d.n))


def restricted_max(boot: np.ndarray, sets: ExtremalSets) -> np.ndarray:
    """Per replicate ``max(max_{E+} B, max_{E-} -B)``."""
    if sets.empty:
        raise RuntimeError("both extremal sets are empty")
    parts = []
    if sets.e_plus.any():
        parts.append(np.max(boot[..., sets.e_plus], axis=-1))
    if sets.e_minus.any():
        parts.append(np.max(-boot[..., sets.e_minus], axis=-1))
    return parts[0] if len(parts) == 1 else np.maximum(parts[0], parts[1])


def relevant_test_2s(
    d: TwoSampleData,
    cfg: BootConfig2S,
    delta: float,
    alpha: float = 0.05,
    c: float | None = None,
    multipliers: tuple[np.ndarray, np.ndarray] | None = None,
    sets: ExtremalSets | None = None,
) -> TestReport:
    """
    Test ``||mu1 - mu2|| <= delta``.

    Rejects when ``d_hat > delta + K / sqrt(m + n)`` with ``K`` the empirical
    ``(1 - alpha)``-quantile of the bootstrap maxima restricted to the
    estimated extremal sets. ``sets`` overrides the estimated sets.
    """
    if delta < 0:
        raise InvalidInputError("delta must be non-negative")
    if sets is None:
        sets = extremal_sets_2s(d, c)
    boot = boot_processes_2s(d, cfg, multipliers)
    return build_report(
        "two-sample-relevant",
        dhat_infty(d),
        delta,
        alpha,
        restricted_max(boot, sets),
        math.sqrt(d.m + d.n),
        cfg.rng.describe(),
        (cfg.l1, cfg.l2),
        sets,
    )
