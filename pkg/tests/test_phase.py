import numpy as np
import pytest

from gwcoop.coop import h_polynomial
from gwcoop.estimate import wilson_interval
from gwcoop.phase import (
    GridMeta,
    PhaseGrid,
    export_csv,
    grid_to_csv,
    make_axis,
    read_csv,
    sweep,
)
from gwcoop.render import critical_curve, read_ppm, render_heatmap, to_ppm, to_svg


def constant_grid(value, n_p=3, n_q=4, estimator="mc_survival"):
    meta = GridMeta(1, 10, 100, 0.5, estimator)
    return PhaseGrid(np.linspace(0, 1, n_p), np.linspace(0, 1, n_q), np.full((n_p, n_q), value), meta)


def test_make_axis():
    assert make_axis(0, 1, 0.25).tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert make_axis(0, 1, 0.1)[3] == 0.3
    assert make_axis(0, 1, 0.00125).size == 801
    with pytest.raises(ValueError):
        make_axis(0, 1, 0)


def test_h_indicator_grid():
    grid = sweep(step=0.25, estimator="h_indicator")
    assert grid.values.shape == (5, 5)
    assert grid.values[4, 4] == 2.0
    assert grid.value_at(1.0, 1.0) == 2.0
    assert np.allclose(grid.values, h_polynomial(grid.p_axis[:, None], grid.q_axis[None, :]))


def test_subcritical_row_upper_bound():
    grid = sweep((0.4, 0.4), (0.0, 1.0), 0.25, trials=1000, threshold=10**6, seed=3)
    for v in grid.values[0]:
        _, hi = wilson_interval(int(round(v * 1000)), 1000)
        assert hi < 0.05


@pytest.mark.parametrize("estimator", ["mc_survival", "mc_coupled"])
def test_sweep_independent_of_jobs(estimator):
    kw = dict(p_range=(0.5, 1.0), q_range=(0.5, 1.0), step=0.25, trials=40, threshold=10**4, seed=11, estimator=estimator)
    a = sweep(jobs=1, **kw)
    b = sweep(jobs=8, **kw)
    assert np.array_equal(a.values, b.values)
    assert grid_to_csv(a) == grid_to_csv(b)


def test_coupled_rows_monotone_in_q():
    grid = sweep((0.6, 1.0), (0.0, 1.0), 0.1, trials=60, threshold=10**4, seed=5, estimator="mc_coupled")
    assert np.all(np.diff(grid.values, axis=1) >= 0)
    assert grid.values[-1, -1] > 0.5


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    grid = PhaseGrid(make_axis(0, 1, 0.2), make_axis(0, 0.5, 0.1), rng.random((6, 6)), GridMeta(9, 7, 1000, 0.1, "mc_survival"))
    path = export_csv(grid, tmp_path / "g.csv")
    text = path.read_bytes()
    assert b"\r" not in text
    lines = text.decode("utf-8").splitlines()
    assert lines[0] == "p,q,value,trials,threshold,seed"
    assert len(lines) == 1 + 36
    assert lines[1].startswith("0.0,0.0,")
    assert lines[2].startswith("0.0,0.1,")  # q varies fastest
    back = read_csv(path)
    assert np.array_equal(back.values, grid.values)
    assert np.array_equal(back.p_axis, grid.p_axis) and np.array_equal(back.q_axis, grid.q_axis)
    assert (back.meta.seed, back.meta.trials, back.meta.explosion_threshold) == (9, 7, 1000)


def test_csv_single_cell(tmp_path):
    grid = PhaseGrid(np.array([0.5]), np.array([0.5]), np.array([[0.25]]), GridMeta(1, 2, 3, 0.1, "x"))
    path = export_csv(grid, tmp_path / "one.csv")
    assert path.read_text(encoding="utf-8") == "p,q,value,trials,threshold,seed\n0.5,0.5,0.25,2,3,1\n"


@pytest.mark.parametrize("value,level", [(0.0, 0), (1.0, 255)])
def test_ppm_constant_grids(tmp_path, value, level):
    grid = constant_grid(value)
    path = render_heatmap(grid, tmp_path / "c.ppm", scale=3)
    w, h, img = read_ppm(path)
    assert (w, h) == (4 * 3, 3 * 3)
    assert np.all(img == level)


def test_ppm_orientation():
    grid = constant_grid(0.0, n_p=2, n_q=2)
    grid.values[1, 0] = 1.0  # largest p, smallest q
    data = to_ppm(grid)
    body = np.frombuffer(data.split(b"\n", 3)[3], dtype=np.uint8).reshape(2, 2, 3)
    assert body[0, 0, 0] == 255 and body[1, 0, 0] == 0 and body[0, 1, 0] == 0


def test_h_indicator_display_is_thresholded():
    grid = sweep(step=0.5, estimator="h_indicator")
    data = to_ppm(grid)
    body = np.frombuffer(data.split(b"\n", 3)[3], dtype=np.uint8).reshape(3, 3, 3)
    assert body[0, 2, 0] == 255  # p = 1, q = 1
    assert body[2, 2, 0] == 0  # p = 0


def test_overlay_points_on_the_curve():
    pts = critical_curve(np.linspace(0, 1, 101))
    assert pts and all(p > 0.5 for _, p in pts)
    assert max(abs(h_polynomial(p, q) - 1.0) for q, p in pts) < 1e-9


def test_overlay_drawn_in_ppm():
    grid = sweep(step=0.05, estimator="h_indicator")
    plain = to_ppm(grid, scale=2)
    drawn = to_ppm(grid, scale=2, overlay=True)
    assert len(plain) == len(drawn) and plain != drawn


def test_svg_output(tmp_path):
    grid = sweep(step=0.25, estimator="h_indicator")
    text = render_heatmap(grid, tmp_path / "h.svg", overlay=True, fmt="svg").read_text(encoding="utf-8")
    assert text.count("<rect") == 25
    assert text.count("<polyline") == 1
    assert "h(p,q)=1" in text
    assert to_svg(grid).count("<polyline") == 0


def test_render_rejects_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        render_heatmap(constant_grid(0.5), tmp_path / "x.png", fmt="png")
