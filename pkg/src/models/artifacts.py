"""In-memory results of the active and passive phases."""

import math
from dataclasses import dataclass, field

from ..config import NUM_ACTIONS
from ..utils.metric_log import MetricLog
from .games import get_task
from .lateral import LateralExpertParams

ALPHABET = tuple(range(NUM_ACTIONS))


@dataclass(eq=False)
class ExpertCheckpoint:
    """A trained expert for one task"""

    task_id: str
    params: object  # NetworkParams or LateralExpertParams
    adam: object
    final_score: float
    log: MetricLog = field(default_factory=MetricLog)
    final_std: float = math.nan
    initial_score: float = math.nan
    random_mean: float = math.nan
    random_std: float = math.nan
    seed: int = 0
    config_hash: str = ""

    @property
    def kind(self):
        return "lateral-expert" if self.is_lateral else "expert"

    @property
    def is_lateral(self):
        return isinstance(self.params, LateralExpertParams)

    @property
    def network(self):
        """The expert's own network, without any lateral pathway"""
        return self.params.expert if self.is_lateral else self.params

    @property
    def task_ids(self):
        return (self.task_id,)

    @property
    def action_ids(self):
        return get_task(self.task_id).action_subset


@dataclass(eq=False)
class AMNCheckpoint:
    """The consolidated student with one feature adapter per source task"""

    params: object  # NetworkParams with a head over the whole alphabet
    adapters: dict  # task id -> FeatureAdapter
    adam: object
    logs: dict = field(default_factory=dict)  # task id -> MetricLog
    expert_scores: dict = field(default_factory=dict)
    baselines: dict = field(default_factory=dict)  # task id -> random-policy mean
    seed: int = 0
    config_hash: str = ""

    kind = "amn"

    @property
    def network(self):
        return self.params

    @property
    def task_ids(self):
        return tuple(self.adapters)

    @property
    def action_ids(self):
        return ALPHABET[: self.params.spec.head_width]
