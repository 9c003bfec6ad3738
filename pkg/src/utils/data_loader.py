"""Read run trees written by the cycle driver back into MetricLogs and pandas frames."""

from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd

from ..errors import ConfigError
from .logger import get_logger
from .metric_log import MetricLog
from .train_params import ExperimentConfig

logger = get_logger(__name__)

CONFIG_FILE = "config.yaml"
METRICS_FILE = "metrics.csv"
HISTOGRAM_FILE = "weight_histogram.csv"


@dataclass
class RunData:
    """One seed directory: runs/<config-hash>/<seed>/"""

    directory: Path
    config: ExperimentConfig
    seed: int
    logs: dict = field(default_factory=dict)  # (phase, task) -> MetricLog
    histograms: dict = field(default_factory=dict)  # (phase, task) -> DataFrame
    summary: pd.DataFrame = None

    @property
    def phases(self):
        return sorted({phase for phase, _ in self.logs})

    def tasks(self, phase):
        return [task for p, task in self.logs if p == phase]


def find_runs(paths):
    """Seed directories (those holding a config.yaml) at or below each path, sorted"""
    found = set()
    for path in paths:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"Run directory {path} does not exist")
        if (path / CONFIG_FILE).is_file():
            found.add(path)
        found.update(p.parent for p in path.rglob(CONFIG_FILE))
    return sorted(found)


def load_run(directory):
    directory = Path(directory)
    config = ExperimentConfig.from_yaml(directory / CONFIG_FILE)
    try:
        seed = int(directory.name)
    except ValueError:
        raise ConfigError(f"Run directory name '{directory.name}' is not a seed")

    run = RunData(directory, config, seed)
    for metrics in sorted(directory.glob(f"*/*/{METRICS_FILE}")):
        phase, task = metrics.parent.parent.name, metrics.parent.name
        run.logs[(phase, task)] = MetricLog.read_csv(metrics, task)
        histogram = metrics.with_name(HISTOGRAM_FILE)
        if histogram.exists():
            run.histograms[(phase, task)] = pd.read_csv(histogram, float_precision="round_trip")
    summary = directory / "summary.csv"
    if summary.exists():
        run.summary = pd.read_csv(summary, float_precision="round_trip")
    logger.debug(f"Loaded {len(run.logs)} metric logs from {directory}")
    return run


def load_runs(paths):
    runs = [load_run(d) for d in find_runs(paths)]
    if not runs:
        raise ConfigError(f"No runs found under {', '.join(str(p) for p in paths)}")
    return runs


def collect_logs(runs, phase, task):
    """The (phase, task) MetricLog of every run that has one, in seed order"""
    return [run.logs[(phase, task)] for run in runs if (phase, task) in run.logs]


def runs_frame(runs):
    """All metric records of all runs as one long frame with seed, phase and task columns"""
    frames = []
    for run in runs:
        for (phase, task), log in run.logs.items():
            frame = log.to_frame()
            frame.insert(0, "task", task)
            frame.insert(0, "phase", phase)
            frame.insert(0, "seed", run.seed)
            frame.insert(0, "config_hash", run.directory.parent.name)
            frames.append(frame)
    if not frames:
        return pd.DataFrame()
    return pd.concat(frames, ignore_index=True)


def summary_frame(runs):
    frames = []
    for run in runs:
        if run.summary is not None:
            frame = run.summary.copy()
            frame.insert(0, "seed", run.seed)
            frames.append(frame)
    if not frames:
        return pd.DataFrame()
    return pd.concat(frames, ignore_index=True)
