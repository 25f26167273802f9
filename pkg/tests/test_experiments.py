"""Sweeps, tables, and their CSV/SVG/manifest outputs."""

from __future__ import annotations

import csv
import dataclasses
import io
import math

import pytest

from rbcount.exact_count import CapExceeded, count_backtrack, decide_from_count
from rbcount.experiments import (CSV_HEADER, AccuracyRow, PointSpec,
                                 SweepConfig, SweepRow, accuracy_table,
                                 crossing_point, emit_accuracy_csv, emit_csv,
                                 emit_comparison_csv, emit_svg_plot,
                                 estimator_comparison, grid_values,
                                 instance_seed, sweep_manifest,
                                 sweep_tightness, write_manifest)
from rbcount.rb_model import RbParams, derive_sizes, generate
from rbcount.theory import expected_count, second_moment_ratio

TINY = SweepConfig(k=2, n=5, alpha=0.8, r=1.5, grid_start=0.1, grid_stop=0.5,
                   grid_step=0.1, instances_per_point=20)


def strip_wall(rows):
    return [dataclasses.replace(row, wall_ms=0.0) for row in rows]


def mk_row(p, yes):
    return SweepRow(p=p, p_eff=p, yes_fraction=yes, mean_count_log=0.0,
                    median_count_log=0.0, mean_nodes=0.0, wall_ms=0.0)


# === grid ===


def test_grid_values_inclusive_and_rounded():
    assert grid_values(0.05, 0.45, 0.02) == [round(0.05 + 0.02 * i, 12)
                                             for i in range(21)]
    assert grid_values(0.1, 0.1, 0.05) == [0.1]
    assert grid_values(1.0, 2.0, 0.5) == [1.0, 1.5, 2.0]
    # an endpoint that only lands on the grid after the epsilon nudge
    assert grid_values(0.0, 0.3, 0.1)[-1] == 0.3


def test_grid_values_validation():
    with pytest.raises(ValueError):
        grid_values(0.1, 0.5, 0.0)
    with pytest.raises(ValueError):
        grid_values(0.5, 0.1, 0.1)


# === sweeps ===


def test_sweep_rows_match_by_hand_recount():
    rows = sweep_tightness(TINY)
    values = grid_values(TINY.grid_start, TINY.grid_stop, TINY.grid_step)
    assert [row.p for row in rows] == values

    # regenerate grid point 0 from scratch and reproduce every statistic
    gi = 0
    params0 = RbParams(TINY.k, TINY.n, TINY.alpha, TINY.r, values[gi])
    sizes = derive_sizes(params0)
    counts, nodes = [], []
    for ii in range(TINY.instances_per_point):
        seed = instance_seed(TINY.base_seed, gi, ii)
        inst = generate(RbParams(TINY.k, TINY.n, TINY.alpha, TINY.r,
                                 values[gi], seed))
        res = count_backtrack(inst)
        counts.append(res.count)
        nodes.append(res.nodes_visited)
    row = rows[gi]
    assert row.p_eff == sizes.t_nogoods / sizes.d ** TINY.k
    yes = sum(1 for c in counts
              if decide_from_count(c, sizes.d, TINY.n, TINY.divisor).answer)
    assert row.yes_fraction == yes / TINY.instances_per_point
    assert row.mean_count_log == pytest.approx(
        math.log(sum(counts) / len(counts)), rel=1e-12)
    ordered = sorted(counts)
    assert row.median_count_log == pytest.approx(
        math.log((ordered[9] + ordered[10]) / 2.0), rel=1e-12)
    assert row.mean_nodes == sum(nodes) / len(nodes)
    assert row.cap_exceeded == 0


def test_sweep_is_deterministic_apart_from_timing():
    assert strip_wall(sweep_tightness(TINY)) == strip_wall(sweep_tightness(TINY))


def test_sweep_parallel_equals_serial():
    serial = sweep_tightness(TINY)
    parallel = sweep_tightness(dataclasses.replace(TINY, jobs=2))
    assert strip_wall(serial) == strip_wall(parallel)


def test_sweep_methods_agree_on_counts():
    bt = sweep_tightness(dataclasses.replace(TINY, instances_per_point=8))
    br = sweep_tightness(dataclasses.replace(TINY, instances_per_point=8,
                                             method="brute"))
    for a, b in zip(bt, br):
        assert (a.p, a.p_eff, a.yes_fraction) == (b.p, b.p_eff, b.yes_fraction)
        assert a.mean_count_log == b.mean_count_log
        assert a.median_count_log == b.median_count_log
        assert a.mean_nodes < b.mean_nodes  # brute always walks the full tree


def test_sweep_over_density_axis():
    config = SweepConfig(k=2, n=5, alpha=0.8, r=0.0, grid_start=0.5,
                         grid_stop=1.5, grid_step=0.5, vary="r", p=0.2,
                         instances_per_point=5)
    rows = sweep_tightness(config)
    assert [row.p for row in rows] == [0.5, 1.0, 1.5]  # grid value in the p slot
    assert len({row.p_eff for row in rows}) == 1       # tightness held fixed


def test_sweep_records_cap_exceedances_without_failing():
    config = dataclasses.replace(TINY, method="brute", brute_cap=100,
                                 instances_per_point=6, grid_stop=0.2)
    rows = sweep_tightness(config)
    for row in rows:
        assert row.cap_exceeded == 6
        assert row.yes_fraction == 0.0
        assert row.mean_count_log == -math.inf
        assert row.mean_nodes == 0.0


def test_sweep_rejects_unknown_method_and_axis():
    with pytest.raises(ValueError):
        sweep_tightness(dataclasses.replace(TINY, method="guess"))
    with pytest.raises(ValueError):
        sweep_tightness(dataclasses.replace(TINY, vary="q"))


def test_sweep_progress_callback_sees_rows_in_order():
    seen = []
    rows = sweep_tightness(dataclasses.replace(TINY, instances_per_point=4),
                           progress=seen.append)
    assert seen == rows


# === crossing ===


def test_crossing_point_interpolates():
    rows = [mk_row(0.1, 1.0), mk_row(0.2, 0.9), mk_row(0.3, 0.4), mk_row(0.4, 0.0)]
    assert crossing_point(rows) == pytest.approx(0.28)


def test_crossing_point_on_exact_half():
    rows = [mk_row(0.1, 0.5), mk_row(0.2, 0.3)]
    assert crossing_point(rows) == pytest.approx(0.1)


def test_crossing_point_none_cases():
    assert crossing_point([]) is None
    assert crossing_point([mk_row(0.1, 0.9)]) is None
    assert crossing_point([mk_row(0.1, 0.9), mk_row(0.2, 0.8)]) is None
    assert crossing_point([mk_row(0.1, 0.2), mk_row(0.2, 0.1)]) is None


def test_crossing_point_takes_first_crossing():
    rows = [mk_row(0.1, 0.8), mk_row(0.2, 0.2), mk_row(0.3, 0.9), mk_row(0.4, 0.1)]
    assert crossing_point(rows) == pytest.approx(0.1 + 0.3 * 0.1 / 0.6)


# === tables ===


def test_accuracy_coverage_grows_with_interval_width():
    deltas = (0.3, 0.5, 0.7, 0.9)
    rows = accuracy_table([PointSpec(2, 6, 0.8, 1.5, 0.25)], deltas,
                          instances=120)
    (row,) = rows
    assert row.instances == 120
    assert len(row.coverage) == len(deltas)
    for narrow, wide in zip(row.coverage, row.coverage[1:]):
        assert narrow <= wide
    assert all(0.0 <= c <= 1.0 for c in row.coverage)
    again = accuracy_table([PointSpec(2, 6, 0.8, 1.5, 0.25)], deltas,
                           instances=120)
    assert again == rows


def test_accuracy_table_rejects_bad_delta():
    point = [PointSpec(2, 5, 0.8, 1.5, 0.2)]
    with pytest.raises(ValueError):
        accuracy_table(point, [0.0])
    with pytest.raises(ValueError):
        accuracy_table(point, [1.5])


def test_accuracy_table_propagates_cap():
    with pytest.raises(CapExceeded):
        accuracy_table([PointSpec(2, 5, 0.8, 1.5, 0.2)], [0.5], instances=3,
                       method="brute", brute_cap=10)


def test_estimator_comparison_mean_tracks_closed_form():
    point = PointSpec(2, 6, 0.8, 1.5, 0.25)
    instances = 200
    (row,) = estimator_comparison([point], instances=instances)
    sizes = derive_sizes(RbParams(point.k, point.n, point.alpha, point.r, point.p))
    p_eff = sizes.t_nogoods / sizes.d ** point.k
    assert row.p_eff == p_eff
    expected = expected_count(point.n, sizes.d, sizes.m, p_eff).expected
    assert row.expected == expected
    assert row.log_expected == pytest.approx(math.log(expected))
    # the pairwise-satisfaction identity gives the count's variance exactly:
    # Var X = E^2 (1/ratio - 1), so the sample mean sits within a few SE of E
    ratio = second_moment_ratio(point.n, point.k, sizes.d, sizes.m, p_eff)
    se = expected * math.sqrt((1.0 / ratio - 1.0) / instances)
    assert abs(row.mean_count - expected) < 4.0 * se


# === renderers ===


def test_csv_header_and_round_trip():
    rows = sweep_tightness(dataclasses.replace(TINY, instances_per_point=4))
    out = io.StringIO()
    emit_csv(rows, out)
    lines = out.getvalue().splitlines()
    assert lines[0] == CSV_HEADER
    assert CSV_HEADER == ("p,p_eff,yes_fraction,mean_count_log,"
                          "median_count_log,mean_nodes,wall_ms")
    parsed = list(csv.DictReader(io.StringIO(out.getvalue())))
    assert len(parsed) == len(rows)
    for rec, row in zip(parsed, rows):
        assert float(rec["p"]) == row.p                # repr round-trips exactly
        assert float(rec["p_eff"]) == row.p_eff
        assert float(rec["yes_fraction"]) == row.yes_fraction
        assert float(rec["mean_count_log"]) == row.mean_count_log
        assert float(rec["median_count_log"]) == row.median_count_log
        assert float(rec["mean_nodes"]) == row.mean_nodes
        assert float(rec["wall_ms"]) == row.wall_ms


def test_accuracy_csv_shape():
    row = AccuracyRow(point=PointSpec(2, 5, 0.8, 1.5, 0.2), p_eff=0.1875,
                      coverage=(0.5, 0.75), instances=40)
    out = io.StringIO()
    emit_accuracy_csv([row], (0.5, 0.9), out)
    header, body = out.getvalue().splitlines()
    assert header.startswith("k,n,alpha,r,p,p_eff,instances,coverage_delta_")
    assert body.split(",")[:2] == ["2", "5"]
    assert body.split(",")[-2:] == ["0.5", "0.75"]


def test_comparison_csv_shape():
    (row,) = estimator_comparison([PointSpec(2, 5, 0.8, 1.5, 0.2)], instances=10)
    out = io.StringIO()
    emit_comparison_csv([row], out)
    header, body = out.getvalue().splitlines()
    assert header == ("k,n,alpha,r,p,p_eff,instances,mean_count,"
                      "mean_count_log,expected,log_expected")
    assert float(body.split(",")[7]) == row.mean_count


def test_svg_plot_contents():
    rows = [mk_row(0.1, 1.0), mk_row(0.2, 0.6), mk_row(0.3, 0.0)]
    out = io.StringIO()
    emit_svg_plot(rows, out, marker=0.22, title="tightness sweep")
    svg = out.getvalue()
    assert svg.startswith("<svg ") and svg.rstrip().endswith("</svg>")
    assert "polyline" in svg and svg.count("<circle") == 3
    assert 'stroke="red"' in svg and "0.2200" in svg
    assert "tightness sweep" in svg

    out = io.StringIO()
    emit_svg_plot(rows, out)  # no marker, no title
    assert 'stroke="red"' not in out.getvalue()


def test_svg_marker_outside_grid_is_dropped():
    rows = [mk_row(0.1, 1.0), mk_row(0.3, 0.0)]
    out = io.StringIO()
    emit_svg_plot(rows, out, marker=0.9)
    assert 'stroke="red"' not in out.getvalue()


# === manifests ===


def test_write_manifest_sorts_and_stamps():
    out = io.StringIO()
    write_manifest({"beta": 2, "alpha": "one"}, out)
    lines = out.getvalue().splitlines()
    assert lines[0] == "alpha = one"
    assert lines[1] == "beta = 2"
    assert any(line.startswith("python_version = ") for line in lines)
    assert any(line.startswith("rbcount_version = ") for line in lines)


def test_write_manifest_keeps_explicit_version():
    out = io.StringIO()
    write_manifest({"rbcount_version": "x.y.z"}, out)
    assert "rbcount_version = x.y.z" in out.getvalue().splitlines()


def test_sweep_manifest_for_tightness_axis():
    entries = sweep_manifest(TINY)
    assert entries["experiment"] == "sweep"
    assert entries["vary"] == "p"
    assert entries["r"] == 1.5
    assert entries["d"] == 4 and entries["m"] == 12
    assert 0.0 < entries["critical_tightness"] < 1.0


def test_sweep_manifest_for_density_axis():
    config = dataclasses.replace(TINY, vary="r", p=0.2, grid_start=0.5,
                                 grid_stop=1.5, grid_step=0.5)
    entries = sweep_manifest(config)
    assert entries["vary"] == "r"
    assert entries["p"] == 0.2
    assert "critical_tightness" not in entries
