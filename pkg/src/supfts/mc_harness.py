"""
Seeded Monte Carlo experiments for the two-sample and change-point procedures.

Replication ``r`` draws everything from ``RngSpec(master_seed, r)``:

* ``child(0)``: the random lag operator ``Psi``
* ``child(1)``, ``child(2)``: innovations of the first and second sample
  (the change-point studies only use ``child(1)``)
* ``child(3)``: bootstrap multipliers

The same noise and multipliers are reused for every value of the parameter
grid, so rates along a grid are computed with common random numbers. Rates
depend only on the replication indices, never on how replications are
split across worker processes.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from supfts import change_point as cp
from supfts.dgp import FtsConfig, MeanSpec, series_coefficients
from supfts.errors import InvalidInputError
from supfts.grid_curves import CANONICAL_GRID_SIZE, CurveSet, Grid
from supfts.rng import RngSpec
from supfts.two_sample import (
    block_centered_sums,
    default_c_2s,
    empirical_quantile,
    extremal_masks,
    restricted_max,
)

__all__ = [
    "ExperimentSpec",
    "ResultTable",
    "builtin_spec",
    "mean_for",
    "power_curve",
    "run_study",
]

log = logging.getLogger(__name__)

STUDIES = ("table1", "table2", "table3", "table4", "fig1", "custom")
TESTS = ("classical_2s", "relevant_2s", "band_2s", "classical_cp", "relevant_cp")

_STREAM_PSI, _STREAM_X, _STREAM_Y, _STREAM_BOOT = 0, 1, 2, 3


@dataclass(frozen=True)
class ExperimentSpec:
    """
    One simulation scenario.

    ``params`` is the grid of the family parameter. For ``meanclass1`` and
    ``meanclass2`` it is the family's own ``a`` or ``k``; for ``relex1`` and
    ``relex2`` it is the target sup-norm ``a`` of the mean difference, reached
    by rescaling the base function (whose sup-norm is 0.1) by ``a / 0.1``.
    The first sample (or the pre-change segment) always has mean zero.
    """

    study: str = "custom"
    test: str = "relevant_2s"
    m: int = 100
    n: int = 200
    process: FtsConfig = field(default_factory=FtsConfig)
    family: str = "relex1"
    params: tuple[float, ...] = (0.1,)
    delta: float = 0.1
    alphas: tuple[float, ...] = (0.01, 0.05, 0.1)
    runs: int = 1000
    R: int = 200
    l: int = 2
    l1: int = 2
    l2: int = 2
    c_const: float | None = None
    vartheta: float = 0.1
    s_star: float = 0.5
    psi_mode: str = "per_run"
    grid_size: int = CANONICAL_GRID_SIZE
    master_seed: int = 20240101

    def __post_init__(self) -> None:
        if self.study not in STUDIES:
            raise InvalidInputError(f"unknown study {self.study!r}")
        if self.test not in TESTS:
            raise InvalidInputError(f"unknown test {self.test!r}")
        if self.runs < 1:
            raise InvalidInputError("runs must be at least 1")
        if not self.params:
            raise InvalidInputError("parameter grid is empty")
        if not self.alphas or not all(0.0 < a < 1.0 for a in self.alphas):
            raise InvalidInputError("alphas must be a non-empty subset of (0, 1)")
        if self.psi_mode not in ("per_run", "fixed"):
            raise InvalidInputError("psi_mode must be 'per_run' or 'fixed'")
        if self.delta < 0:
            raise InvalidInputError("delta must be non-negative")
        if self.master_seed < 0:
            raise InvalidInputError("master_seed must be non-negative")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))

    @property
    def is_changepoint(self) -> bool:
        return self.test.endswith("_cp")

    def echo(self) -> dict:
        out = asdict(self)
        proc = self.process
        out["process"] = {
            "kind": proc.kind,
            "D": proc.D,
            "kappa": proc.kappa,
            "burn_in": proc.burn_in,
            "degree": proc.degree,
        }
        return out


def mean_for(family: str, param: float) -> MeanSpec:
    if family in ("relex1", "relex2"):
        return MeanSpec(family, amplitude=param / 0.1)
    if family == "meanclass2":
        return MeanSpec(family, param=int(param))
    return MeanSpec(family, param=param)


_BUILTIN = {
    "table1": dict(
        test="classical_2s",
        m=100,
        n=200,
        process=FtsConfig(kind="fAR1"),
        family="meanclass1",
        params=(0.0, 0.4, 0.6, 0.8),
        delta=0.0,
    ),
    "table2": dict(test="relevant_2s", m=100, n=200, family="relex1", params=(0.1,), delta=0.1),
    "table3": dict(test="band_2s", m=100, n=200, family="relex1", params=(0.1,), delta=0.0),
    "table4": dict(
        test="relevant_cp",
        n=200,
        family="relex1",
        params=(0.37, 0.38, 0.39, 0.4, 0.41, 0.42, 0.43),
        delta=0.4,
    ),
    "fig1": dict(
        test="relevant_2s",
        m=100,
        n=200,
        family="relex1",
        params=(0.05, 0.075, 0.09, 0.1, 0.11, 0.125, 0.15),
        delta=0.1,
    ),
}


def builtin_spec(study: str, **overrides) -> ExperimentSpec:
    """Scenario of one of the simulation tables; keyword arguments override fields."""
    if study not in _BUILTIN:
        raise InvalidInputError(f"no built-in scenario for {study!r}")
    kwargs = dict(_BUILTIN[study])
    kwargs.update(overrides)
    return ExperimentSpec(study=study, **kwargs)


@dataclass
class ResultTable:
    spec: ExperimentSpec
    rows: list[dict] = field(default_factory=list)

    COLUMNS = (
        "study",
        "test",
        "family",
        "m",
        "n",
        "param",
        "d_inf",
        "delta",
        "alpha",
        "runs",
        "rate",
        "mc_se",
        "coverage",
        "half_width",
    )

    def rate(self, param: float, alpha: float) -> float:
        return self._row(param, alpha)["rate"]

    def row(self, param: float, alpha: float) -> dict:
        return self._row(param, alpha)

    def _row(self, param: float, alpha: float) -> dict:
        for row in self.rows:
            if math.isclose(row["param"], param) and math.isclose(row["alpha"], alpha):
                return row
        raise KeyError((param, alpha))

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=self.COLUMNS, lineterminator="\n")
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: _fmt_cell(row.get(k, "")) for k in self.COLUMNS})

    def write_plot_data(self, path: str | Path, alpha: float) -> None:
        """``(a, rate)`` pairs at one level, for power-curve plots."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["a", "rate"])
            for row in self.rows:
                if math.isclose(row["alpha"], alpha):
                    writer.writerow([_fmt_cell(row["param"]), _fmt_cell(row["rate"])])

    def manifest(self) -> dict:
        return {
            "spec": self.spec.echo(),
            "replication_streams": {
                "master_seed": self.spec.master_seed,
                "stream_id": "replication index 0..runs-1",
                "children": {"psi": _STREAM_PSI, "x": _STREAM_X, "y": _STREAM_Y, "boot": _STREAM_BOOT},
            },
        }

    def write_manifest(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.manifest(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _fmt_cell(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


class _Context:
    """Per-process cached objects derived from a spec."""

    def __init__(self, spec: ExperimentSpec) -> None:
        self.spec = spec
        self.grid = Grid.uniform(spec.grid_size)
        self.basis = spec.process.basis(self.grid)
        self.means = np.array([mean_for(spec.family, p)(self.grid.points) for p in spec.params])
        self.fixed_psi = None
        if spec.psi_mode == "fixed":
            self.fixed_psi = self._psi(RngSpec(spec.master_seed, 0))

    def _psi(self, rep: RngSpec) -> np.ndarray:
        return self.spec.process.with_psi(rep.child(_STREAM_PSI)).psi

    def process_for(self, rep: RngSpec) -> FtsConfig:
        psi = self.fixed_psi if self.fixed_psi is not None else self._psi(rep)
        return replace(self.spec.process, psi=psi)

    def noise(self, count: int, cfg: FtsConfig, rng: RngSpec) -> np.ndarray:
        return self.basis.evaluate(series_coefficients(count, cfg, rng.generator()))


def _replicate(ctx: _Context, r: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Decisions of replication ``r``.

    Returns ``(hits, widths)`` of shape ``(P, A)``: rejection (or coverage)
    indicators and band half-widths (zero for tests).
    """
    spec = ctx.spec
    rep = RngSpec(spec.master_seed, r)
    cfg = ctx.process_for(rep)
    boot_rng = rep.child(_STREAM_BOOT)
    P, A = len(spec.params), len(spec.alphas)
    hits = np.zeros((P, A), dtype=bool)
    widths = np.zeros((P, A))

    if not spec.is_changepoint:
        x = ctx.noise(spec.m, cfg, rep.child(_STREAM_X))
        y0 = ctx.noise(spec.n, cfg, rep.child(_STREAM_Y))
        total = spec.m + spec.n
        root = math.sqrt(total)
        gen = boot_rng.generator()
        xi = gen.standard_normal((spec.R, spec.m - spec.l1 + 1))
        zeta = gen.standard_normal((spec.R, spec.n - spec.l2 + 1))
        # the bootstrap processes do not depend on the (row-constant) means
        boot = root * (
            xi @ block_centered_sums(x, spec.l1) / spec.m
            + zeta @ block_centered_sums(y0, spec.l2) / spec.n
        )
        sup_stats = np.max(np.abs(boot), axis=1)
        xbar = x.mean(axis=0)
        ybar0 = y0.mean(axis=0)
        c = default_c_2s(spec.m, spec.n) if spec.c_const is None else spec.c_const
        for p, mu2 in enumerate(ctx.means):
            diff = xbar - (ybar0 + mu2)
            dhat = float(np.max(np.abs(diff)))
            if spec.test == "classical_2s":
                for a, alpha in enumerate(spec.alphas):
                    hits[p, a] = dhat > empirical_quantile(sup_stats, alpha) / root
            elif spec.test == "band_2s":
                err = float(np.max(np.abs(diff + mu2)))  # center minus (mu1 - mu2)
                for a, alpha in enumerate(spec.alphas):
                    half = empirical_quantile(sup_stats, alpha) / root
                    hits[p, a] = err <= half
                    widths[p, a] = half
            else:
                sets = extremal_masks(diff, dhat, c / root)
                k_stats = restricted_max(boot, sets)
                for a, alpha in enumerate(spec.alphas):
                    hits[p, a] = dhat > spec.delta + empirical_quantile(k_stats, alpha) / root
        return hits, widths

    eta = ctx.noise(spec.n, cfg, rep.child(_STREAM_X))
    split = int(math.floor(spec.n * spec.s_star))
    cp_cfg = cp.CpConfig(l=spec.l, R=spec.R, vartheta=spec.vartheta, c_n=spec.c_const, rng=boot_rng)
    xi = boot_rng.generator().standard_normal((spec.R, spec.n - spec.l + 1))
    for p, mu2 in enumerate(ctx.means):
        values = eta.copy()
        values[split:] += mu2
        series = CurveSet(ctx.grid, values)
        if spec.test == "classical_cp":
            res = cp.classical_cp_test(series, cp_cfg, spec.alphas[0], multipliers=xi)
            stats, observed, offset = res.report.boot_stats, res.m_stat, 0.0
        else:
            res = cp.relevant_cp_test(series, cp_cfg, spec.delta, spec.alphas[0], multipliers=xi)
            stats, observed, offset = res.report.boot_stats, res.d_hat, spec.delta
        root = math.sqrt(spec.n)
        for a, alpha in enumerate(spec.alphas):
            hits[p, a] = observed > offset + empirical_quantile(stats, alpha) / root
    return hits, widths


def _run_chunk(spec: ExperimentSpec, reps: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    ctx = _Context(spec)
    P, A = len(spec.params), len(spec.alphas)
    hit_count = np.zeros((P, A), dtype=np.int64)
    width_sum = np.zeros((P, A))
    for r in reps:
        try:
            hits, widths = _replicate(ctx, r)
        except Exception as exc:
            raise RuntimeError(
                f"replication {r} (seed {spec.master_seed}:{r}) failed: {exc}"
            ) from exc
        hit_count += hits
        width_sum += widths
    return hit_count, width_sum


def run_study(spec: ExperimentSpec, workers: int = 1) -> ResultTable:
    """
    Run ``spec.runs`` replications and tabulate one row per (parameter, alpha).

    ``workers > 1`` spreads contiguous blocks of replications over processes;
    the integer tallies are summed, so the table does not depend on it.
    """
    start = time.perf_counter()
    reps = list(range(spec.runs))
    if workers <= 1:
        hit_count, width_sum = _run_chunk(spec, reps)
    else:
        chunks = [c.tolist() for c in np.array_split(np.array(reps), workers) if c.size]
        hit_count = 0
        width_sum = 0
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for hc, ws in pool.map(_run_chunk, [spec] * len(chunks), chunks):
                hit_count = hit_count + hc
                width_sum = width_sum + ws
    elapsed = time.perf_counter() - start
    log.info("study %s (%s) finished %d runs in %.1fs", spec.study, spec.test, spec.runs, elapsed)

    table = ResultTable(spec)
    base = 0.1 if spec.family in ("relex1", "relex2") else None
    grid = Grid.uniform(spec.grid_size)
    for p, param in enumerate(spec.params):
        d_inf = param if base else float(np.max(np.abs(mean_for(spec.family, param)(grid.points))))
        for a, alpha in enumerate(spec.alphas):
            rate = float(hit_count[p, a]) / spec.runs
            row = {
                "study": spec.study,
                "test": spec.test,
                "family": spec.family,
                "m": spec.m if not spec.is_changepoint else "",
                "n": spec.n,
                "param": param,
                "d_inf": d_inf,
                "delta": spec.delta,
                "alpha": alpha,
                "runs": spec.runs,
                "rate": rate,
                "mc_se": math.sqrt(rate * (1.0 - rate) / spec.runs),
                "coverage": rate if spec.test == "band_2s" else "",
                "half_width": float(width_sum[p, a]) / spec.runs if spec.test == "band_2s" else "",
                "wall_time": elapsed,
            }
            table.rows.append(row)
    return table


def power_curve(spec: ExperimentSpec, workers: int = 1) -> ResultTable:
    """Rejection rates along ``spec.params`` for a relevant test."""
    if spec.test not in ("relevant_2s", "relevant_cp", "classical_2s", "classical_cp"):
        raise InvalidInputError("power curves need a test, not a band")
    return run_study(spec, workers=workers)
