"""
Command-line interface.

Exit status reflects whether the command ran: 0 on success, 2 on invalid
input or flags, 1 on internal errors. Test decisions are written to the
report files only.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from supfts import change_point as cp
from supfts import mc_harness as mc
from supfts import reports
from supfts import two_sample as ts
from supfts.errors import InvalidInputError
from supfts.grid_curves import CurveSet, Grid, read_curveset_csv, write_curveset_csv
from supfts.rng import RngSpec
from supfts.smoothing import FourierSpec, read_raw_panel, smooth_to_curves

log = logging.getLogger("supfts")


def _load(path: str, args) -> CurveSet:
    if args.raw:
        grid = Grid.uniform(args.grid_size or 101)
        return smooth_to_curves(read_raw_panel(path), FourierSpec(args.basis), grid)
    curves = read_curveset_csv(path)
    if args.grid_size and curves.grid.size != args.grid_size:
        raise InvalidInputError(
            f"{path}: grid has {curves.grid.size} points, --grid-size is {args.grid_size}"
        )
    return curves


def _emit(fields: dict, args) -> None:
    reports.write_fields_csv(fields, args.out)
    if args.text:
        reports.write_text(reports.report_text(fields), args.text)


def _two_sample_inputs(args):
    data = ts.TwoSampleData(_load(args.x, args), _load(args.y, args))
    l1 = args.block_x or args.block
    l2 = args.block_y or args.block
    cfg = ts.BootConfig2S(R=args.reps, l1=l1, l2=l2, rng=RngSpec(args.seed))
    return data, cfg


def cmd_two_sample(args) -> None:
    data, cfg = _two_sample_inputs(args)
    if args.delta == 0:
        rep = ts.classical_test_2s(data, cfg, args.alpha)
    else:
        rep = ts.relevant_test_2s(data, cfg, args.delta, args.alpha, c=args.c_const)
    _emit(reports.report_fields(rep), args)
    if args.boot_out:
        reports.write_boot_stats(rep, args.boot_out)


def cmd_band(args) -> None:
    data, cfg = _two_sample_inputs(args)
    band = ts.confidence_band_2s(data, cfg, args.alpha)
    reports.write_band_csv(band, args.out)
    if args.text:
        reports.write_text(reports.band_text(band), args.text)


def cmd_changepoint(args) -> None:
    series = _load(args.input, args)
    cfg = cp.CpConfig(
        l=args.block, R=args.reps, vartheta=args.vartheta, c_n=args.c_const, rng=RngSpec(args.seed)
    )
    if args.delta == 0:
        res = cp.classical_cp_test(series, cfg, args.alpha)
    else:
        res = cp.relevant_cp_test(series, cfg, args.delta, args.alpha)
    _emit(reports.cp_fields(res), args)
    if args.boot_out:
        reports.write_boot_stats(res.report, args.boot_out)


def cmd_smooth(args) -> None:
    args.raw = True
    write_curveset_csv(_load(args.input, args), args.out)


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def cmd_simulate(args) -> None:
    overrides = {"runs": args.runs, "master_seed": args.seed}
    for name in ("family", "m", "n", "delta", "R", "vartheta", "grid_size"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    if args.params is not None:
        overrides["params"] = args.params
    if args.alphas is not None:
        overrides["alphas"] = args.alphas
    if args.block is not None:
        overrides.update(l=args.block, l1=args.block, l2=args.block)
    if args.c_const is not None:
        overrides["c_const"] = args.c_const
    if args.psi_mode is not None:
        overrides["psi_mode"] = args.psi_mode
    spec = mc.builtin_spec(args.study, **overrides)
    table = mc.run_study(spec, workers=args.workers)
    table.write_csv(args.out)
    if args.manifest:
        table.write_manifest(args.manifest)
    if args.plot_data:
        table.write_plot_data(args.plot_data, args.plot_alpha)


def _common(p: argparse.ArgumentParser, with_delta: bool = True) -> None:
    if with_delta:
        p.add_argument("--delta", type=float, default=0.0, help="relevance margin; 0 runs the classical test")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--reps", type=int, default=200, help="bootstrap replications R")
    p.add_argument("--block", type=int, default=2, help="block length l")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-size", type=int, default=None)
    p.add_argument("--c-const", type=float, default=None, help="extremal-set constant (default 0.1 log N)")
    p.add_argument("--raw", action="store_true", help="inputs are raw panels to be Fourier-smoothed")
    p.add_argument("--basis", type=int, default=49, help="number of Fourier basis functions")
    p.add_argument("--out", required=True)
    p.add_argument("--text", default=None, help="also write a plain-text report here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="supfts", description=__doc__.splitlines()[1])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("two-sample", help="classical or relevant two-sample test")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    _common(p)
    p.add_argument("--block-x", type=int, default=None)
    p.add_argument("--block-y", type=int, default=None)
    p.add_argument("--boot-out", default=None)
    p.set_defaults(func=cmd_two_sample)

    p = sub.add_parser("band", help="simultaneous confidence band for mu1 - mu2")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    _common(p, with_delta=False)
    p.add_argument("--block-x", type=int, default=None)
    p.add_argument("--block-y", type=int, default=None)
    p.set_defaults(func=cmd_band)

    p = sub.add_parser("changepoint", help="classical or relevant change-point test")
    p.add_argument("--input", required=True)
    _common(p)
    p.add_argument("--vartheta", type=float, default=0.1)
    p.add_argument("--boot-out", default=None)
    p.set_defaults(func=cmd_changepoint)

    p = sub.add_parser("smooth", help="Fourier-smooth a raw panel into a curve CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--basis", type=int, default=49)
    p.add_argument("--grid-size", type=int, default=101)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_smooth)

    p = sub.add_parser("simulate", help="run a built-in simulation study")
    p.add_argument("--study", required=True, choices=sorted(mc._BUILTIN))
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--seed", type=int, default=20240101)
    p.add_argument("--family", default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--params", type=_floats, default=None)
    p.add_argument("--alphas", type=_floats, default=None)
    p.add_argument("--reps", dest="R", type=int, default=None)
    p.add_argument("--block", type=int, default=None)
    p.add_argument("--vartheta", type=float, default=None)
    p.add_argument("--c-const", type=float, default=None)
    p.add_argument("--grid-size", type=int, default=None)
    p.add_argument("--psi-mode", choices=("per_run", "fixed"), default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest", default=None)
    p.add_argument("--plot-data", default=None)
    p.add_argument("--plot-alpha", type=float, default=0.05)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        args.func(args)
    except (InvalidInputError, OSError) as exc:
        print(f"supfts: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"supfts: internal error: {exc!r}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
