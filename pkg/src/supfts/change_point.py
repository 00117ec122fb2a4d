"""
Change-point inference for the mean of a functional time series.

For a series ``X_1..X_n`` the CUSUM process

    U(k/n, t) = (sum_{j<=k} X_j(t) - (k/n) sum_{j<=n} X_j(t)) / n

is piecewise linear in ``s`` between the knots ``k/n``; every supremum over
``s`` is therefore taken over the knots. ``M = max |U|`` estimates
``s*(1-s*) d_inf`` and the maximising knot estimates the change location.
Critical values come from a multiplier block bootstrap applied to the
series with the estimated jump removed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from supfts.errors import InvalidInputError
from supfts.grid_curves import Curve, CurveSet
from supfts.rng import RngSpec
from supfts.two_sample import (
    ExtremalSets,
    TestReport,
    build_report,
    block_centered_sums,
    extremal_masks,
    restricted_max,
)

__all__ = [
    "CpConfig",
    "CpResult",
    "UProcess",
    "classical_cp_test",
    "cp_bootstrap",
    "cp_fit",
    "default_c_cp",
    "estimate_cp",
    "m_stat",
    "relevant_cp_test",
    "u_process",
]

_BATCH = 32


@dataclass(frozen=True)
class CpConfig:
    l: int = 2
    R: int = 200
    vartheta: float = 0.1
    c_n: float | None = None
    rng: RngSpec = field(default_factory=lambda: RngSpec(0))

    def __post_init__(self) -> None:
        if self.l < 1:
            raise InvalidInputError("block length must be positive")
        if self.R < 1:
            raise InvalidInputError("R must be positive")
        if not 0.0 < self.vartheta < 0.5:
            raise InvalidInputError("vartheta must lie in (0, 1/2)")
        if self.c_n is not None and self.c_n <= 0:
            raise InvalidInputError("c_n must be positive")


@dataclass(frozen=True, eq=False)
class UProcess:
    knots: np.ndarray  # k/n, k = 0..n
    values: np.ndarray  # (n+1) x G

    @property
    def n(self) -> int:
        return self.knots.size - 1

    def row_norms(self) -> np.ndarray:
        return np.max(np.abs(self.values), axis=1)


@dataclass(frozen=True, eq=False)
class CpResult:
    s_hat: float
    split: int  # number of rows before the change, floor(s_hat * n)
    m_stat: float
    d_hat: float
    mu1_hat: Curve
    mu2_hat: Curve
    report: TestReport | None = None


def _cusum(values: np.ndarray) -> np.ndarray:
    n = values.shape[0]
    csum = np.concatenate([np.zeros((1, values.shape[1])), np.cumsum(values, axis=0)])
    k = np.arange(n + 1)[:, None]
    out = (csum - (k / n) * csum[-1]) / n
    # exact zeros at both ends
    out[0] = 0.0
    out[-1] = 0.0
    return out


def u_process(s: CurveSet) -> UProcess:
    if s.n < 2:
        raise InvalidInputError("a change-point analysis needs at least two curves")
    return UProcess(np.arange(s.n + 1) / s.n, _cusum(s.values))


def m_stat(s: CurveSet) -> float:
    return float(np.max(u_process(s).row_norms()))


def _argmax_knot(norms: np.ndarray) -> int:
    # norms indexed by k = 0..n; search k = 1..n-1, first maximiser wins
    return 1 + int(np.argmax(norms[1:-1]))


def _clamp(s_tilde: float, vartheta: float) -> float:
    return max(vartheta, min(s_tilde, 1.0 - vartheta))


def estimate_cp(s: CurveSet, vartheta: float = 0.1) -> float:
    """Clamped location ``max(vartheta, min(k*/n, 1 - vartheta))`` of the CUSUM peak."""
    if s.n < 2:
        raise InvalidInputError("a change-point analysis needs at least two curves")
    norms = u_process(s).row_norms()
    return _clamp(_argmax_knot(norms) / s.n, vartheta)


def _split_index(s_hat: float, n: int) -> int:
    k = math.floor(s_hat * n + 1e-9)
    return min(max(k, 1), n - 1)


def cp_fit(s: CurveSet, vartheta: float = 0.1) -> CpResult:
    """Point estimates: location, ``M``, ``d_hat`` and the two partial means."""
    u = u_process(s)
    norms = u.row_norms()
    n = s.n
    s_hat = _clamp(_argmax_knot(norms) / n, vartheta)
    m = float(np.max(norms))
    k = _split_index(s_hat, n)
    return CpResult(
        s_hat=s_hat,
        split=k,
        m_stat=m,
        d_hat=m / (s_hat * (1.0 - s_hat)),
        mu1_hat=Curve(s.grid, s.values[:k].mean(axis=0)),
        mu2_hat=Curve(s.grid, s.values[k:].mean(axis=0)),
    )


def _blocks(s: CurveSet, fit: CpResult, l: int) -> np.ndarray:
    if l > s.n:
        raise InvalidInputError(f"block length l={l} exceeds n={s.n}")
    y = np.array(s.values)
    y[fit.split :] -= fit.mu2_hat.values - fit.mu1_hat.values
    return block_centered_sums(y, l)


def _multipliers(cfg: CpConfig, count: int, multipliers: np.ndarray | None) -> np.ndarray:
    if multipliers is None:
        return cfg.rng.generator().standard_normal((cfg.R, count))
    xi = np.asarray(multipliers, float)
    if xi.shape != (cfg.R, count):
        raise InvalidInputError(f"multipliers must have shape {(cfg.R, count)}")
    return xi


def cp_bootstrap(
    s: CurveSet,
    cfg: CpConfig,
    multipliers: np.ndarray | None = None,
    fit: CpResult | None = None,
) -> np.ndarray:
    """
    Bootstrap processes ``W^(r)(k/n, t)``, shape ``(R, n+1, G)``.

    Block sums are formed from the de-jumped series. Blocks start at
    ``i = 1..n-l+1``; past the last start the process is frozen, so
    ``B(k/n) = B((n-l+1)/n)`` for larger ``k``. ``multipliers`` has shape
    ``(R, n-l+1)``.
    """
    fit = cp_fit(s, cfg.vartheta) if fit is None else fit
    z = _blocks(s, fit, cfg.l)
    xi = _multipliers(cfg, z.shape[0], multipliers)
    n = s.n
    out = np.empty((cfg.R, n + 1, s.grid.size))
    for lo in range(0, cfg.R, _BATCH):
        out[lo : lo + _BATCH] = _w_batch(xi[lo : lo + _BATCH], z, n)
    return out


def _w_batch(xi: np.ndarray, z: np.ndarray, n: int) -> np.ndarray:
    r, kb = xi.shape
    b = np.zeros((r, n + 1, z.shape[1]))
    b[:, 1 : kb + 1] = np.cumsum(xi[:, :, None] * z[None], axis=1)
    b[:, kb + 1 :] = b[:, kb : kb + 1]
    b /= math.sqrt(n)
    frac = (np.arange(n + 1) / n)[None, :, None]
    w = b - frac * b[:, -1:, :]
    w[:, 0] = 0.0
    w[:, -1] = 0.0
    return w


def _classical_stats(xi: np.ndarray, z: np.ndarray, n: int) -> np.ndarray:
    stats = np.empty(xi.shape[0])
    for lo in range(0, xi.shape[0], _BATCH):
        w = _w_batch(xi[lo : lo + _BATCH], z, n)
        stats[lo : lo + _BATCH] = np.max(np.abs(w), axis=(1, 2))
    return stats


def _w_at(xi: np.ndarray, z: np.ndarray, n: int, k: int) -> np.ndarray:
    """``W^(r)(k/n, .)`` for all replicates, shape ``(R, G)``."""
    kb = z.shape[0]
    b_k = xi[:, : min(k, kb)] @ z[: min(k, kb)]
    b_1 = xi @ z
    return (b_k - (k / n) * b_1) / math.sqrt(n)


def default_c_cp(n: int) -> float:
    return 0.1 * math.log(n)


def classical_cp_test(
    s: CurveSet,
    cfg: CpConfig,
    alpha: float = 0.05,
    multipliers: np.ndarray | None = None,
) -> CpResult:
    """Test of no change: reject if ``M > q / sqrt(n)`` with ``q`` from ``max |W^(r)|``."""
    fit = cp_fit(s, cfg.vartheta)
    z = _blocks(s, fit, cfg.l)
    xi = _multipliers(cfg, z.shape[0], multipliers)
    stats = _classical_stats(xi, z, s.n)
    report = build_report(
        "changepoint-classical",
        fit.m_stat,
        0.0,
        alpha,
        stats,
        math.sqrt(s.n),
        cfg.rng.describe(),
        (cfg.l,),
    )
    return replace(fit, report=report)


def cp_extremal_sets(fit: CpResult, n: int, c_n: float | None = None) -> ExtremalSets:
    """
    Points where ``+-(mu1_hat - mu2_hat) >= d_hat - c_n / sqrt(n)``.

    When the location was clamped, ``d_hat`` can exceed the sup-norm of the
    mean difference by more than the cut and leave both sets empty; the cut
    is then taken relative to that sup-norm instead.
    """
    c_n = default_c_cp(n) if c_n is None else c_n
    diff = fit.mu1_hat.values - fit.mu2_hat.values
    cut = c_n / math.sqrt(n)
    sets = extremal_masks(diff, fit.d_hat, cut)
    if sets.empty:
        sets = extremal_masks(diff, float(np.max(np.abs(diff))), cut)
    return sets


def relevant_cp_test(
    s: CurveSet,
    cfg: CpConfig,
    delta: float,
    alpha: float = 0.05,
    multipliers: np.ndarray | None = None,
) -> CpResult:
    """
    Test ``||mu1 - mu2|| <= delta`` for the means before and after the change.

    The bootstrap statistics are ``max(max_{E+} W(s_hat), max_{E-} -W(s_hat))``
    divided by ``s_hat (1 - s_hat)``, with ``W`` evaluated at the split knot.
    """
    if delta < 0:
        raise InvalidInputError("delta must be non-negative")
    fit = cp_fit(s, cfg.vartheta)
    z = _blocks(s, fit, cfg.l)
    xi = _multipliers(cfg, z.shape[0], multipliers)
    sets = cp_extremal_sets(fit, s.n, cfg.c_n)
    w = _w_at(xi, z, s.n, fit.split)
    stats = restricted_max(w, sets) / (fit.s_hat * (1.0 - fit.s_hat))
    report = build_report(
        "changepoint-relevant",
        fit.d_hat,
        delta,
        alpha,
        stats,
        math.sqrt(s.n),
        cfg.rng.describe(),
        (cfg.l,),
        sets,
    )
    return replace(fit, report=report)
