import numpy as np
import pytest

from conftest import step_series
from supfts import reports
from supfts.cli import main
from supfts.dgp import FtsConfig, gen_series
from supfts.errors import IngestionError, InvalidInputError
from supfts.grid_curves import CurveSet, Grid, read_curveset_csv, write_curveset_csv
from supfts.rng import RngSpec
from supfts.smoothing import FourierSpec, RawPanel, read_raw_panel, smooth_to_curves


def test_constant_and_cosine_fits(grid):
    days = np.arange(365) / 365
    panel = RawPanel.from_array(np.vstack([np.full(365, 4.2), np.cos(2 * np.pi * days) + 1]))
    curves = smooth_to_curves(panel, FourierSpec(49), grid)
    np.testing.assert_allclose(curves.values[0], 4.2, atol=1e-10)
    np.testing.assert_allclose(curves.values[1], np.cos(2 * np.pi * grid.points) + 1, atol=1e-8)


def test_leap_year_and_missing(grid):
    t = np.arange(366) / 366
    row = np.sin(2 * np.pi * t)
    row[::20] = np.nan  # 19 of 366 missing
    curves = smooth_to_curves(RawPanel(("1992",), (row,)), FourierSpec(49), grid)
    np.testing.assert_allclose(curves.values[0], np.sin(2 * np.pi * grid.points), atol=1e-8)
    bad = np.ones(100)
    bad[:11] = np.nan
    with pytest.raises(IngestionError, match="'station7'"):
        RawPanel(("station7",), (bad,))


def test_linearity(grid, rng):
    a, b = rng.standard_normal((2, 3, 120))
    spec = FourierSpec(11)
    fa = smooth_to_curves(RawPanel.from_array(a), spec, grid).values
    fb = smooth_to_curves(RawPanel.from_array(b), spec, grid).values
    fab = smooth_to_curves(RawPanel.from_array(2 * a - 3 * b), spec, grid).values
    np.testing.assert_allclose(fab, 2 * fa - 3 * fb, atol=1e-10)
    scaled = smooth_to_curves(RawPanel.from_array(a).scaled(5.0), spec, grid).values
    np.testing.assert_allclose(scaled, 5 * fa, atol=1e-10)


def test_rank_and_spec_errors(grid):
    with pytest.raises(IngestionError):
        smooth_to_curves(RawPanel.from_array(np.ones((1, 20))), FourierSpec(49), grid)
    # two allowed gaps leave 18 equations for 19 coefficients
    row = np.ones(20)
    row[[3, 11]] = np.nan
    with pytest.raises(IngestionError, match="rank"):
        smooth_to_curves(RawPanel(("s1",), (row,)), FourierSpec(19), grid)
    with pytest.raises(InvalidInputError):
        FourierSpec(48)


def test_read_raw_panel(tmp_path):
    p = tmp_path / "raw.csv"
    p.write_text("a,1,2,,4,5,6,7,8,9,10,11\nb,1,2,3,4,5,6,7,8,9,10,11\n")
    panel = read_raw_panel(p)
    assert panel.labels == ("a", "b") and panel.missing_mask(0).sum() == 1
    p.write_text("a,1,x\n")
    with pytest.raises(IngestionError):
        read_raw_panel(p)


# command line


def sample(tmp_path, name, n, seed, shift=0.0, grid=None):
    grid = grid or Grid.uniform(101)
    cfg = FtsConfig().with_psi(RngSpec(seed))
    s = gen_series(n, cfg, CurveSet(grid, np.full((n, grid.size), shift)), RngSpec(seed, 1))
    path = tmp_path / name
    write_curveset_csv(s, path)
    return str(path)


def test_cli_two_sample_identical(tmp_path):
    x = sample(tmp_path, "x.csv", 40, 1)
    out = tmp_path / "r.csv"
    assert main(["two-sample", "--x", x, "--y", x, "--out", str(out), "--text", str(tmp_path / "r.txt")]) == 0
    rep = reports.read_report_csv(out)
    assert float(rep["statistic"]) == 0.0 and rep["reject"] == "false"
    assert "p_value" in (tmp_path / "r.txt").read_text()


def test_cli_relevant_and_band(tmp_path):
    x = sample(tmp_path, "x.csv", 60, 1)
    y = sample(tmp_path, "y.csv", 80, 2, shift=1.0)
    out = tmp_path / "r.csv"
    boot = tmp_path / "b.csv"
    argv = ["two-sample", "--x", x, "--y", y, "--delta", "0.5", "--out", str(out), "--boot-out", str(boot)]
    assert main(argv) == 0
    rep = reports.read_report_csv(out)
    assert rep["kind"] == "two-sample-relevant" and rep["reject"] == "true"
    assert len(boot.read_text().splitlines()) == 201
    assert main(["band", "--x", x, "--y", y, "--out", str(tmp_path / "band.csv")]) == 0
    rows = (tmp_path / "band.csv").read_text().splitlines()
    assert rows[0] == "t,lower,center,upper" and len(rows) == 102


def test_cli_changepoint_step(tmp_path, grid):
    jump = 1.765 * np.sin(np.pi * grid.points)
    path = tmp_path / "cp.csv"
    write_curveset_csv(step_series(grid, 100, 62, jump), path)
    out = tmp_path / "r.csv"
    assert main(["changepoint", "--input", str(path), "--delta", "1.0", "--out", str(out)]) == 0
    rep = reports.read_report_csv(out)
    assert float(rep["s_hat"]) == 0.62
    assert float(rep["d_hat"]) == pytest.approx(1.765, rel=1e-12)
    assert rep["reject"] == "true"
    assert main(["changepoint", "--input", str(path), "--out", str(out)]) == 0
    assert reports.read_report_csv(out)["kind"] == "changepoint-classical"


def test_cli_simulate_is_reproducible(tmp_path):
    outs = []
    for name in ("a.csv", "b.csv"):
        argv = ["simulate", "--study", "table2", "--runs", "50", "--seed", "7", "--out", str(tmp_path / name)]
        assert main(argv) == 0
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]
    argv = [
        "simulate", "--study", "fig1", "--runs", "5", "--params", "0.05,0.15", "--m", "30", "--n", "40",
        "--out", str(tmp_path / "f.csv"), "--manifest", str(tmp_path / "m.json"),
        "--plot-data", str(tmp_path / "p.csv"),
    ]
    assert main(argv) == 0
    assert len((tmp_path / "p.csv").read_text().splitlines()) == 3


def test_cli_exit_codes(tmp_path):
    x = sample(tmp_path, "x.csv", 20, 1)
    small = sample(tmp_path, "s.csv", 20, 2, grid=Grid.uniform(11))
    bad = tmp_path / "bad.csv"
    bad.write_text("0,1\n1,nope\n")
    out = str(tmp_path / "o.csv")
    assert main(["two-sample", "--x", x, "--y", small, "--out", out]) == 2
    assert main(["two-sample", "--x", x, "--y", str(bad), "--out", out]) == 2
    assert main(["two-sample", "--x", x, "--y", str(tmp_path / "missing.csv"), "--out", out]) == 2
    assert main(["two-sample", "--x", x, "--y", x, "--reps", "0", "--out", out]) == 2
    assert main(["two-sample", "--x", x]) == 2
    assert main(["simulate", "--study", "table2", "--runs", "0", "--out", out]) == 2
    assert main(["simulate", "--study", "table2", "--seed", "-1", "--out", out]) == 2


def test_cli_internal_error(tmp_path, monkeypatch):
    import supfts.cli as cli

    def boom(*a, **k):
        raise ZeroDivisionError

    monkeypatch.setattr(cli.ts, "classical_test_2s", boom)
    x = sample(tmp_path, "x.csv", 20, 1)
    assert main(["two-sample", "--x", x, "--y", x, "--out", str(tmp_path / "o.csv")]) == 1


def test_raw_pipeline(tmp_path):
    rng = np.random.default_rng(3)
    t = np.arange(365) / 365

    def panel(path, units, amp, missing):
        rows = []
        for u in range(units):
            vals = amp * np.cos(2 * np.pi * t) + 0.3 * rng.standard_normal(365)
            cells = ["" if (u < missing and d % 50 == 0) else format(v, ".6f") for d, v in enumerate(vals)]
            rows.append(f"u{u}," + ",".join(cells))
        path.write_text("\n".join(rows) + "\n")
        return str(path)

    x = panel(tmp_path / "x.csv", 30, 1.0, 5)
    y = panel(tmp_path / "y.csv", 30, 1.0, 0)
    out = tmp_path / "r.csv"
    assert main(["two-sample", "--raw", "--basis", "9", "--x", x, "--y", y, "--delta", "0.2", "--out", str(out)]) == 0
    assert reports.read_report_csv(out)["reject"] == "false"
    smooth_out = tmp_path / "curves.csv"
    assert main(["smooth", "--input", x, "--basis", "9", "--out", str(smooth_out)]) == 0
    assert read_curveset_csv(smooth_out).n == 30
    bad = tmp_path / "bad.csv"
    bad.write_text("u0," + ",".join([""] * 40 + ["1"] * 325) + "\n")
    assert main(["smooth", "--input", str(bad), "--out", str(smooth_out)]) == 2
