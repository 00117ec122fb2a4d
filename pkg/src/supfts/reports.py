"""CSV and plain-text serialisation of test reports, change-point results and bands."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from supfts.change_point import CpResult
from supfts.two_sample import Band, TestReport

__all__ = [
    "band_text",
    "cp_fields",
    "read_report_csv",
    "report_fields",
    "report_text",
    "write_band_csv",
    "write_boot_stats",
    "write_fields_csv",
    "write_text",
]


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _mask(mask: np.ndarray) -> str:
    return "".join("1" if v else "0" for v in mask)


def report_fields(rep: TestReport) -> dict[str, str]:
    out = {
        "kind": rep.kind,
        "statistic": fmt(rep.statistic),
        "delta": fmt(rep.delta),
        "alpha": fmt(rep.alpha),
        "quantile": fmt(rep.quantile),
        "scale": fmt(rep.scale),
        "critical_value": fmt(rep.critical_value),
        "reject": fmt(rep.reject),
        "p_value": fmt(rep.p_value),
        "R": fmt(rep.R),
        "seed": rep.seed,
        "blocks": " ".join(str(b) for b in rep.blocks),
    }
    if rep.extremal is not None:
        out["threshold"] = fmt(rep.extremal.threshold)
        out["e_plus"] = _mask(rep.extremal.e_plus)
        out["e_minus"] = _mask(rep.extremal.e_minus)
    return out


def cp_fields(res: CpResult) -> dict[str, str]:
    out = {
        "s_hat": fmt(res.s_hat),
        "split": fmt(res.split),
        "m_stat": fmt(res.m_stat),
        "d_hat": fmt(res.d_hat),
    }
    if res.report is not None:
        out.update(report_fields(res.report))
    return out


def write_fields_csv(fields: dict[str, str], path: str | Path) -> None:
    """One header row of field names and one row of values."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(fields))
        writer.writerow(list(fields.values()))


def read_report_csv(path: str | Path) -> dict[str, str]:
    with open(path, newline="") as fh:
        header, values = list(csv.reader(fh))[:2]
    return dict(zip(header, values))


def report_text(fields: dict[str, str]) -> str:
    width = max(len(k) for k in fields)
    return "".join(f"{k.ljust(width)} : {v}\n" for k, v in fields.items())


def write_text(text: str, path: str | Path) -> None:
    Path(path).write_text(text)


def write_boot_stats(rep: TestReport, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["r", "stat"])
        for r, v in enumerate(rep.boot_stats, start=1):
            writer.writerow([r, fmt(v)])


def write_band_csv(band: Band, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "lower", "center", "upper"])
        for t, lo, c, hi in zip(
            band.center.grid.points, band.lower.values, band.center.values, band.upper.values
        ):
            writer.writerow([fmt(t), fmt(lo), fmt(c), fmt(hi)])


def band_text(band: Band) -> str:
    return report_text(
        {
            "alpha": fmt(band.alpha),
            "half_width": fmt(band.half_width),
            "grid_size": fmt(band.center.grid.size),
        }
    )
