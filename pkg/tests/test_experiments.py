import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from mpcorner import (
    Decomposition,
    GridSpec,
    IntervalModule,
    PointCloud,
    scdr_sup,
)
from mpcorner.experiments import (
    ExperimentReport,
    decompose_cloud,
    dense_phi_image,
    fit_loglog_slope,
    make_generator,
    run_bench,
    run_convergence,
    run_instability,
)
from mpcorner.pipeline import annulus_nonuniform


def test_report_csv_round_trips_floats(tmp_path):
    report = ExperimentReport(
        name="demo",
        params={"seed": 3, "delta": 0.1 + 0.2},
        columns=("n", "value"),
        rows=((4, 1.0 / 3.0), (8, 2e-17)),
        summary={"slope": -0.5000000001},
    )
    path = tmp_path / "demo.csv"
    report.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "# experiment=demo"
    assert "# param delta=" in lines[1]
    assert lines[-2] == "4,0.3333333333333333"
    # repr round-trips doubles exactly
    assert float(lines[1].split("=")[-1]) == 0.1 + 0.2
    assert float(lines[-1].split(",")[-1]) == 2e-17


def test_fit_loglog_slope_recovers_power_law():
    ns = np.array([100, 200, 400, 800, 1600])
    slope, ok = fit_loglog_slope(ns, 3.7 * ns ** -0.5)
    assert ok
    assert slope == pytest.approx(-0.5, abs=1e-9)


def test_fit_loglog_slope_degenerate_inputs():
    assert fit_loglog_slope([10], [1.0]) == (pytest.approx(float("nan"), nan_ok=True), False)
    slope, ok = fit_loglog_slope([10, 20, 40], [0.0, 0.0, 0.0])
    assert math.isnan(slope) and not ok
    slope, ok = fit_loglog_slope([10, 10, 10], [1.0, 2.0, 3.0])
    assert math.isnan(slope) and not ok


def test_make_generator():
    assert make_generator("annulus") is annulus_nonuniform
    assert make_generator("circle")(50, 0).size > 50
    marker = lambda size, seed: PointCloud([[0.0, 0.0]])
    assert make_generator(marker) is marker
    with pytest.raises(ValueError, match="unknown generator"):
        make_generator("torus")


def test_decompose_cloud_handles_constant_cloud():
    cloud = PointCloud([[0.5, 0.5], [0.5, 0.5], [0.5, 0.5]])
    dec, bif = decompose_cloud(
        cloud, bif_resolution=(6, 6), num_lines=4, bandwidth=0.3
    )
    assert dec.ambient_dim == 2
    assert len(bif.simplices) > 0


def test_dense_image_approximates_corner_image():
    module = IntervalModule([[0.2, 0.3]], [[0.7, 0.8]])
    dec = Decomposition(degree=1, intervals=(module,), ambient_dim=2)
    grid = GridSpec((0.0, 0.0), (1.0, 1.0), (5, 5))
    delta = 0.2
    exact = scdr_sup(dec, "b", delta, grid)
    sampled = dense_phi_image(dec, grid, delta, samples_per_axis=64)
    assert float(np.abs(exact.values - sampled.values).max()) <= 0.05


def test_dense_image_validates_inputs():
    dec = Decomposition(degree=1, intervals=(), ambient_dim=2)
    grid = GridSpec((0.0, 0.0), (1.0, 1.0), (3, 3))
    with pytest.raises(ValueError):
        dense_phi_image(dec, grid, 0.0)
    with pytest.raises(ValueError):
        dense_phi_image(dec, grid, 0.1, samples_per_axis=0)


def test_run_convergence_validates_sizes():
    with pytest.raises(ValueError, match="at least 4"):
        run_convergence([10, 20, 30], reps=1, seed=0, delta=0.1, kind="b")
    with pytest.raises(ValueError, match="ascending"):
        run_convergence([40, 20, 30, 50], reps=1, seed=0, delta=0.1, kind="b")
    with pytest.raises(ValueError, match="repetition"):
        run_convergence([10, 20, 30, 40], reps=0, seed=0, delta=0.1, kind="b")


def test_run_convergence_rows_independent_of_worker_count():
    kwargs = dict(
        reps=1,
        seed=7,
        delta=0.15,
        kind="b",
        base_size=60,
        image_resolution=(8, 8),
        bif_resolution=(6, 6),
        num_lines=4,
    )
    serial = run_convergence([10, 15, 20, 30], workers=1, **kwargs)
    parallel = run_convergence([10, 15, 20, 30], workers=2, **kwargs)
    assert serial.rows == parallel.rows
    assert serial.columns == ("n", "rep", "dist_linf", "dist_l2sq")
    assert len(serial.rows) == 4


def test_run_bench_structure():
    report = run_bench([1, 2], [4], seed=0, delta=0.2, repeats=1, samples_per_axis=4)
    methods = {(r[0], r[2]) for r in report.rows}
    for m in (1, 2):
        for name in ("scdr_sup_a", "scdr_sup_b", "scdr_sup_c", "mpl_k1", "baseline_dense_b"):
            assert (m, name) in methods
    for row in report.rows:
        assert row[3] >= 0.0
        if row[2] == "baseline_dense_b":
            assert row[4] == 1.0
    # The baseline at 4 samples per axis is coarse but in the ballpark.
    assert report.summary["max_abs_diff_m1_g4"] <= 0.3


def test_run_instability_zero_eps_row_is_exact_match():
    report = run_instability([0.0, 0.01, 0.05], delta=0.5, image_resolution=(10, 10))
    assert report.rows[0][0] == 0.0
    assert report.rows[0][2] == 0.0  # proxy discrepancy against itself
    assert all(d == 0.0 for d in report.rows[0][3:])
    assert report.summary["proxy_monotone"] is True
    assert report.summary["min_discrepancy_positive_eps"] >= 0.9
    for row in report.rows[1:]:
        assert row[2] >= 0.9  # merged support is about a square bigger


def test_run_instability_image_distance_scales_with_eps():
    report = run_instability([0.0, 0.002, 0.02], delta=0.5, image_resolution=(20, 20))
    small = max(report.rows[1][3:])
    large = max(report.rows[2][3:])
    assert small <= large + 1e-12
    assert small <= 0.1


def test_run_instability_rejects_negative_eps():
    with pytest.raises(ValueError):
        run_instability([-0.1], delta=0.5)
