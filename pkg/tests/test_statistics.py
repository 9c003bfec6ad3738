import math

import numpy as np
import pandas as pd
import pytest

from src.errors import AggregationWarning, ConfigError
from src.utils.metric_log import MetricLog, MetricRecord
from src.visualization.statistics import aggregate_runs, asymptotic_gain, jumpstart, print_statistics


def make_log(values, start=1):
    log = MetricLog("mini-pong")
    for offset, value in enumerate(values):
        log.append(MetricRecord(start + offset, (start + offset) * 5000, value, 1, 0.1))
    return log


def test_single_seed_has_zero_spread():
    series = aggregate_runs([make_log([1.0, 2.0, 4.0])])
    np.testing.assert_array_equal(series.mean, [1.0, 2.0, 4.0])
    np.testing.assert_array_equal(series.std, 0.0)
    assert series.seeds == 1


def test_two_seeds_mean_and_population_std():
    series = aggregate_runs([make_log([1.0, 0.0]), make_log([3.0, 0.0])])
    assert series.mean[0] == 2.0 and series.std[0] == 1.0
    assert series.mean[1] == 0.0 and series.std[1] == 0.0
    np.testing.assert_array_equal(series.iterations, [1, 2])


def test_aggregating_a_mean_curve_is_idempotent():
    series = aggregate_runs([make_log([1.0, 5.0]), make_log([3.0, 2.0]), make_log([2.0, 2.0])])
    again = aggregate_runs([series.to_metric_log("mini-pong")])
    np.testing.assert_allclose(again.mean, series.mean)
    np.testing.assert_array_equal(again.std, 0.0)


def test_differing_grids_truncate_with_warning():
    with pytest.warns(AggregationWarning):
        series = aggregate_runs([make_log([1.0, 2.0, 3.0]), make_log([3.0, 4.0])])
    assert len(series) == 2
    np.testing.assert_array_equal(series.mean, [2.0, 3.0])


def test_no_logs_rejected():
    with pytest.raises(ConfigError):
        aggregate_runs([])


def test_percent_column_aggregation():
    a, b = make_log([0.0]), make_log([0.0])
    a.records[0] = MetricRecord(1, 5000, 0.0, 1, 0.1, 0.5)
    b.records[0] = MetricRecord(1, 5000, 0.0, 1, 0.1, 0.7)
    series = aggregate_runs([a, b], column="percent_of_expert")
    assert series.mean[0] == pytest.approx(0.6)


def test_jumpstart_is_first_iteration_difference():
    assert jumpstart(make_log([5.0, 9.0]), make_log([2.0, 8.0])) == 3.0


def test_jumpstart_of_aggregates():
    transfer = aggregate_runs([make_log([4.0]), make_log([6.0])])
    baseline = aggregate_runs([make_log([1.0]), make_log([3.0])])
    assert jumpstart(transfer, baseline) == 3.0


def test_asymptotic_gain_uses_last_iterations():
    transfer = make_log([0.0, 0.0, 4.0, 5.0, 6.0])
    baseline = make_log([9.0, 9.0, 1.0, 2.0, 3.0])
    assert asymptotic_gain(transfer, baseline) == pytest.approx(3.0)
    assert asymptotic_gain(transfer, baseline, last=1) == pytest.approx(3.0)


def test_empty_logs_rejected_by_transfer_metrics():
    with pytest.raises(ConfigError):
        jumpstart(MetricLog(), make_log([1.0]))
    with pytest.raises(ConfigError):
        asymptotic_gain(make_log([1.0]), MetricLog())


def test_print_statistics(capsys):
    summary = pd.DataFrame(
        [
            {"phase": "phase1", "task": "mini-pong", "final_score": 1.0, "initial_score": -3.0,
             "jumpstart": math.nan, "asymptotic_gain": math.nan},
            {"phase": "phase2", "task": "mini-pong", "final_score": 2.0, "initial_score": 0.5,
             "jumpstart": 3.5, "asymptotic_gain": 1.0},
        ]
    )
    print_statistics(summary)
    out = capsys.readouterr().out
    assert out.startswith("=== Consolidation Lab Results ===")
    assert "phase2:" in out
    assert "jumpstart   +3.500" in out
    assert out.count("jumpstart") == 1


def test_print_statistics_without_results(capsys):
    print_statistics(None)
    assert "No results available" in capsys.readouterr().out
