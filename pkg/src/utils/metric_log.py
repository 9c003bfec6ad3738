"""Per-iteration learning curves and their CSV form."""

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from ..errors import ConfigError

METRIC_COLUMNS = ["iteration", "env_steps", "mean_return", "episodes", "epsilon", "percent_of_expert"]
EVENT_COLUMNS = ["iteration", "label"]


@dataclass(frozen=True)
class MetricRecord:
    iteration: int
    env_steps: int
    mean_return: float  # NaN when no episode completed in the iteration
    episodes: int
    epsilon: float
    percent_of_expert: float = math.nan


@dataclass
class MetricLog:
    """Ordered iteration records for one task plus free-form event annotations"""

    task_id: str = ""
    records: list = field(default_factory=list)
    events: list = field(default_factory=list)  # (iteration, label)

    def __len__(self):
        return len(self.records)

    def append(self, record):
        if self.records and record.iteration <= self.records[-1].iteration:
            raise ConfigError(
                f"Iterations must increase strictly: {record.iteration} after {self.records[-1].iteration}"
            )
        if record.episodes < 0:
            raise ConfigError(f"Episode count must be non-negative, got {record.episodes}")
        self.records.append(record)

    def annotate(self, iteration, label):
        self.events.append((int(iteration), str(label)))

    @property
    def iterations(self):
        return np.array([r.iteration for r in self.records], dtype=np.int64)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records], dtype=np.float64)

    @property
    def mean_returns(self):
        return self.column("mean_return")

    @property
    def percent_of_expert(self):
        return self.column("percent_of_expert")

    def to_frame(self):
        return pd.DataFrame([asdict(r) for r in self.records], columns=METRIC_COLUMNS)

    @classmethod
    def from_frame(cls, frame, task_id=""):
        log = cls(task_id)
        for row in frame.itertuples(index=False):
            log.append(
                MetricRecord(
                    iteration=int(row.iteration),
                    env_steps=int(row.env_steps),
                    mean_return=float(row.mean_return),
                    episodes=int(row.episodes),
                    epsilon=float(row.epsilon),
                    percent_of_expert=float(row.percent_of_expert),
                )
            )
        return log

    def write_csv(self, path):
        """Write metrics.csv (NaN as empty cells) and, when present, events.csv beside it"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, na_rep="", lineterminator="\n")
        if self.events:
            events = pd.DataFrame(self.events, columns=EVENT_COLUMNS)
            events.to_csv(path.with_name("events.csv"), index=False, lineterminator="\n")

    @classmethod
    def read_csv(cls, path, task_id=""):
        path = Path(path)
        frame = pd.read_csv(
            path,
            float_precision="round_trip",
            dtype={"mean_return": "float64", "epsilon": "float64", "percent_of_expert": "float64"},
        )
        missing = set(METRIC_COLUMNS) - set(frame.columns)
        if missing:
            raise ConfigError(f"{path} is missing metric columns {sorted(missing)}")
        log = cls.from_frame(frame, task_id)
        events_path = path.with_name("events.csv")
        if events_path.exists():
            events = pd.read_csv(events_path, dtype={"label": str})
            log.events = [(int(i), str(label)) for i, label in zip(events["iteration"], events["label"])]
        return log

    def to_dict(self):
        return {
            "task_id": self.task_id,
            "records": [asdict(r) for r in self.records],
            "events": [list(e) for e in self.events],
        }

    @classmethod
    def from_dict(cls, data):
        log = cls(data.get("task_id", ""))
        for record in data.get("records", []):
            log.append(MetricRecord(**{k: _nan_if_none(v) for k, v in record.items()}))
        log.events = [(int(i), str(label)) for i, label in data.get("events", [])]
        return log


def _nan_if_none(value):
    return math.nan if value is None else value
