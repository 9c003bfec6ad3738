import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import AggregationWarning, ConfigError
from ..utils.logger import get_logger
from ..utils.metric_log import MetricLog, MetricRecord

logger = get_logger(__name__)


@dataclass
class AggregateSeries:
    """Per-iteration mean and population standard deviation across seeds"""

    iterations: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    seeds: int
    column: str = "mean_return"
    label: str = ""

    def __len__(self):
        return len(self.iterations)

    def to_metric_log(self, task_id=""):
        """The mean curve as a single-seed MetricLog (other columns zero or NaN)"""
        log = MetricLog(task_id)
        for iteration, value in zip(self.iterations, self.mean):
            fields = {
                "iteration": int(iteration),
                "env_steps": 0,
                "mean_return": math.nan,
                "episodes": 0,
                "epsilon": math.nan,
                "percent_of_expert": math.nan,
            }
            fields[self.column] = float(value)
            log.append(MetricRecord(**fields))
        return log


def _common_prefix(logs):
    grids = [log.iterations for log in logs]
    length = min(len(g) for g in grids)
    for i in range(length):
        if any(g[i] != grids[0][i] for g in grids[1:]):
            return i
    return length


def aggregate_runs(logs, column="mean_return", label=""):
    """
    Combine one MetricLog per seed. Logs with differing iteration grids are truncated to their
    common prefix with an AggregationWarning.
    """
    logs = list(logs)
    if not logs:
        raise ConfigError("aggregate_runs needs at least one log")
    length = _common_prefix(logs)
    if any(len(log) != length for log in logs):
        message = f"Iteration grids differ across {len(logs)} logs; truncated to the first {length} iterations"
        logger.warning(message)
        warnings.warn(message, AggregationWarning, stacklevel=2)

    values = np.array([log.column(column)[:length] for log in logs], dtype=np.float64)
    if length == 0:
        values = np.zeros((len(logs), 0))
    return AggregateSeries(
        iterations=logs[0].iterations[:length],
        mean=values.mean(axis=0),
        std=values.std(axis=0),
        seeds=len(logs),
        column=column,
        label=label,
    )


def _values(series, column="mean_return"):
    if isinstance(series, AggregateSeries):
        return series.mean
    return series.column(column)


def jumpstart(transfer, baseline, column="mean_return"):
    """First-iteration value of the transfer run minus that of the baseline"""
    transfer_values, baseline_values = _values(transfer, column), _values(baseline, column)
    if len(transfer_values) == 0 or len(baseline_values) == 0:
        raise ConfigError("jumpstart needs two non-empty logs")
    return float(transfer_values[0] - baseline_values[0])


def asymptotic_gain(transfer, baseline, last=3, column="mean_return"):
    """Difference between the means of the last ``last`` iterations of both runs"""
    transfer_values, baseline_values = _values(transfer, column), _values(baseline, column)
    if len(transfer_values) == 0 or len(baseline_values) == 0:
        raise ConfigError("asymptotic_gain needs two non-empty logs")
    return float(np.nanmean(transfer_values[-last:]) - np.nanmean(baseline_values[-last:]))


def print_statistics(summary):
    """Print a run summary table (one row per phase and task)"""
    print("=== Consolidation Lab Results ===")

    if summary is None or len(summary) == 0:
        print("No results available")
        return

    for phase, rows in summary.groupby("phase", sort=False):
        print(f"\n{phase}:")
        for row in rows.itertuples(index=False):
            line = f"  {row.task:<14} final {row.final_score:8.3f}   initial {row.initial_score:8.3f}"
            if not math.isnan(row.jumpstart):
                line += f"   jumpstart {row.jumpstart:+8.3f}"
            if not math.isnan(row.asymptotic_gain):
                line += f"   asymptotic gain {row.asymptotic_gain:+8.3f}"
            print(line)
