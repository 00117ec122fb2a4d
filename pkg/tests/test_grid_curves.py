import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from supfts.dgp import MeanSpec, eval_mean
from supfts.errors import InvalidInputError
from supfts.grid_curves import (
    Curve,
    CurveSet,
    Grid,
    argmax_abs,
    diff,
    mean_curve,
    partial_mean,
    read_curveset_csv,
    scale,
    shift,
    sup_norm,
    write_curveset_csv,
)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def test_grid_validation():
    with pytest.raises(InvalidInputError):
        Grid(np.array([0.0]))
    with pytest.raises(InvalidInputError):
        Grid(np.array([0.0, 0.3, 1.0]))
    with pytest.raises(InvalidInputError):
        Grid(np.array([0.1, 0.5, 1.0]))
    g = Grid(np.linspace(0, 1, 11))
    assert g == Grid.uniform(11)
    assert g != Grid.uniform(12)


def test_canonical_grid_contains_breakpoints(grid):
    for t in (0.1, 0.2, 0.25, 0.3, 0.5, 0.7, 0.75, 0.8):
        assert grid.points[grid.index_of(t)] == t


def test_sup_norm_examples(grid):
    assert sup_norm(Curve.zeros(grid)) == 0.0
    assert sup_norm(Curve.from_function(grid, lambda t: 0.4 * t * (1 - t))) == pytest.approx(0.1, abs=1e-15)
    assert sup_norm(eval_mean(MeanSpec("relex1"), grid)) == 0.1


def test_non_finite_rejected(grid):
    vals = np.zeros(grid.size)
    vals[3] = np.nan
    with pytest.raises(InvalidInputError):
        Curve(grid, vals)
    with pytest.raises(InvalidInputError):
        Curve(grid, np.zeros(grid.size + 1))


def test_mean_and_partial_mean(grid):
    f = Curve.from_function(grid, np.sin)
    assert np.array_equal(mean_curve(CurveSet.from_curves([f])).values, f.values)
    assert sup_norm(mean_curve(CurveSet.from_curves([f, -f]))) == 0.0
    consts = CurveSet(grid, np.array([[1.0], [2.0], [3.0]]) * np.ones(grid.size))
    assert np.all(mean_curve(consts).values == 2.0)

    assert np.array_equal(partial_mean(consts, 1, 3).values, mean_curve(consts).values)
    assert np.all(partial_mean(consts, 2, 2).values == 2.0)
    step = CurveSet(grid, np.r_[np.zeros(5), np.ones(5)][:, None] * np.ones(grid.size))
    assert np.all(partial_mean(step, 6, 10).values == 1.0)
    for bad in ((0, 2), (3, 2), (1, 4)):
        with pytest.raises(InvalidInputError):
            partial_mean(consts, *bad)


def test_arithmetic(grid):
    f = Curve.from_function(grid, np.cos)
    assert sup_norm(diff(f, f)) == 0.0
    assert sup_norm(scale(f, 0.0)) == 0.0
    assert np.all(shift(Curve.zeros(grid), 1.0).values == 1.0)
    with pytest.raises(InvalidInputError):
        diff(f, Curve.zeros(Grid.uniform(11)))


def test_argmax_abs(grid):
    assert argmax_abs(Curve.constant(grid, 2.0)) == (0, 2.0)
    assert argmax_abs(Curve.from_function(grid, lambda t: t)) == (100, 1.0)
    # brute force: first grid point whose relex1 value reaches |0.1|
    relex1 = eval_mean(MeanSpec("relex1"), grid)
    first = next(i for i, v in enumerate(relex1.values) if abs(v) >= 0.1)
    assert first == 20 and grid.points[first] == 0.2
    assert argmax_abs(relex1) == (20, 0.1)


@settings(max_examples=60, deadline=None)
@given(
    arrays(float, 21, elements=finite),
    arrays(float, 21, elements=finite),
    st.floats(-1e3, 1e3, allow_nan=False),
)
def test_norm_axioms(a, b, s):
    g = Grid.uniform(21)
    f, h = Curve(g, a), Curve(g, b)
    assert sup_norm(scale(f, s)) == pytest.approx(abs(s) * sup_norm(f), rel=1e-12, abs=0)
    assert sup_norm(f + h) <= (sup_norm(f) + sup_norm(h)) * (1 + 1e-12)
    assert (sup_norm(f) == 0) == bool(np.all(a == 0))
    idx, val = argmax_abs(f)
    assert abs(f.values[idx]) == sup_norm(f) and val == f.values[idx]


@pytest.mark.parametrize("spec", [MeanSpec("relex1"), MeanSpec("relex2"), MeanSpec("relex1", amplitude=-3.0)])
def test_piecewise_linear_refinement(spec):
    coarse = sup_norm(eval_mean(spec, Grid.uniform(101)))
    fine = sup_norm(eval_mean(spec, Grid.uniform(10001)))
    assert abs(coarse - fine) <= 1e-9


def test_csv_round_trip(tmp_path, rng):
    g = Grid.uniform(17)
    vals = rng.standard_normal((5, 17)) * 10.0 ** rng.integers(-20, 20, size=(5, 17))
    s = CurveSet(g, vals)
    path = tmp_path / "c.csv"
    write_curveset_csv(s, path)
    back = read_curveset_csv(path)
    assert back.grid == g
    assert np.array_equal(back.values, s.values)


def test_csv_malformed(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("0,0.5,1\n1,2\n")
    with pytest.raises(InvalidInputError):
        read_curveset_csv(p)
    p.write_text("0,0.5,1\n1,x,2\n")
    with pytest.raises(InvalidInputError):
        read_curveset_csv(p)
