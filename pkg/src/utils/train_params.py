"""Validated configuration objects for the active phase, the passive phase and whole experiments."""

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import yaml

from ..config import (
    ACTIVE_LEARNING_RATE,
    ACTIVE_TOTAL_STEPS,
    ADAM_EPSILON,
    BASELINE_EPISODES,
    BATCH_SIZE,
    DEFAULT_SEEDS,
    ENV_STEPS_PER_UPDATE,
    EPSILON_ANNEAL_STEPS,
    EPSILON_END,
    EPSILON_START,
    EVAL_EPISODES,
    EVAL_EPSILON,
    FEATURE_LOSS_WEIGHT,
    GAMMA,
    HUBER_DELTA,
    ITERATION_STEPS,
    LEARN_EVERY,
    MONITOR_EVAL_EPISODES,
    N_STEP,
    PASSIVE_LEARNING_RATE,
    PASSIVE_SHORT_STEPS,
    PASSIVE_TOTAL_STEPS,
    PRIORITY_ALPHA,
    PRIORITY_BETA_END,
    PRIORITY_BETA_START,
    REPLAY_CAPACITY,
    TARGET_SYNC_STEPS,
    TEMPERATURE,
    WARMUP_STEPS,
)
from ..errors import ConfigError, LabError

HASH_LENGTH = 12


def _check(condition, message):
    if not condition:
        raise ConfigError(message)


def _hash(data):
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:HASH_LENGTH]


class _ParamsMixin:
    def update(self, **kwargs):
        """Validated copy with the given fields replaced"""
        unknown = set(kwargs) - {f.name for f in fields(self)}
        if unknown:
            raise ConfigError(f"Unknown {type(self).__name__} fields: {sorted(unknown)}")
        updated = replace(self, **kwargs)
        updated.validate()
        return updated

    def to_dict(self):
        return asdict(self)

    def config_hash(self):
        return _hash(self.to_dict())

    @classmethod
    def from_dict(cls, data):
        data = dict(data or {})
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"Unknown {cls.__name__} fields: {sorted(unknown)}")
        params = cls(**data)
        params.validate()
        return params


def _validate_exploration(params):
    _check(0.0 <= params.epsilon_end <= params.epsilon_start <= 1.0, "Need 0 <= epsilon_end <= epsilon_start <= 1")
    _check(params.epsilon_anneal_steps > 0, "epsilon_anneal_steps must be positive")


def _validate_replay(params):
    _check(params.replay_capacity >= params.batch_size, "replay_capacity must hold at least one batch")
    _check(params.batch_size > 0, "batch_size must be positive")
    _check(params.priority_alpha >= 0, "priority_alpha must be non-negative")
    _check(0.0 <= params.beta_start <= params.beta_end <= 1.0, "Need 0 <= beta_start <= beta_end <= 1")


@dataclass(frozen=True)
class TrainConfig(_ParamsMixin):
    """Active-phase (expert) training parameters"""

    total_steps: int = ACTIVE_TOTAL_STEPS
    iteration_steps: int = ITERATION_STEPS
    epsilon_start: float = EPSILON_START
    epsilon_end: float = EPSILON_END
    epsilon_anneal_steps: int = EPSILON_ANNEAL_STEPS
    gamma: float = GAMMA
    n_step: int = N_STEP
    target_sync_steps: int = TARGET_SYNC_STEPS
    batch_size: int = BATCH_SIZE
    learn_every: int = LEARN_EVERY
    warmup_steps: int = WARMUP_STEPS
    learning_rate: float = ACTIVE_LEARNING_RATE
    adam_epsilon: float = ADAM_EPSILON
    huber_delta: float = HUBER_DELTA
    replay_capacity: int = REPLAY_CAPACITY
    priority_alpha: float = PRIORITY_ALPHA
    beta_start: float = PRIORITY_BETA_START
    beta_end: float = PRIORITY_BETA_END
    eval_episodes: int = EVAL_EPISODES
    eval_epsilon: float = EVAL_EPSILON
    baseline_episodes: int = BASELINE_EPISODES

    def validate(self):
        _check(self.total_steps >= 0, "total_steps must be non-negative")
        _check(self.iteration_steps > 0, "iteration_steps must be positive")
        _validate_exploration(self)
        _check(0.0 <= self.gamma <= 1.0, "gamma must lie in [0, 1]")
        _check(self.n_step >= 1, "n_step must be at least 1")
        _check(self.target_sync_steps > 0, "target_sync_steps must be positive")
        _check(self.learn_every > 0, "learn_every must be positive")
        _check(self.warmup_steps >= 0, "warmup_steps must be non-negative")
        _check(self.learning_rate > 0, "learning_rate must be positive")
        _check(self.adam_epsilon > 0, "adam_epsilon must be positive")
        _check(self.huber_delta > 0, "huber_delta must be positive")
        _validate_replay(self)
        _check(self.eval_episodes > 0, "eval_episodes must be positive")
        _check(0.0 <= self.eval_epsilon <= 1.0, "eval_epsilon must lie in [0, 1]")
        _check(self.baseline_episodes > 1, "baseline_episodes must be at least 2")
        return self


@dataclass(frozen=True)
class DistillConfig(_ParamsMixin):
    """
    Passive-phase (consolidation) parameters.

    Budgets count ticks of the passive phase. Every tick each task's collector takes one environment
    step, so total_steps is also the number of steps played in each task.
    """

    total_steps: int = PASSIVE_TOTAL_STEPS
    iteration_steps: int = ITERATION_STEPS
    temperature: float = TEMPERATURE
    feature_weight: float = FEATURE_LOSS_WEIGHT
    batch_size: int = BATCH_SIZE
    learning_rate: float = PASSIVE_LEARNING_RATE
    adam_epsilon: float = ADAM_EPSILON
    epsilon_start: float = EPSILON_START
    epsilon_end: float = EPSILON_END
    epsilon_anneal_steps: int = EPSILON_ANNEAL_STEPS
    env_steps_per_update: int = ENV_STEPS_PER_UPDATE
    warmup_steps: int = WARMUP_STEPS
    replay_capacity: int = REPLAY_CAPACITY
    priority_alpha: float = PRIORITY_ALPHA
    beta_start: float = PRIORITY_BETA_START
    beta_end: float = PRIORITY_BETA_END
    monitor_episodes: int = MONITOR_EVAL_EPISODES
    eval_episodes: int = EVAL_EPISODES
    eval_epsilon: float = EVAL_EPSILON

    @classmethod
    def short(cls, **kwargs):
        """The shortened passive phase (a third of the default budget)"""
        return cls(total_steps=PASSIVE_SHORT_STEPS, **kwargs).validate()

    def validate(self):
        _check(self.total_steps >= 0, "total_steps must be non-negative")
        _check(self.iteration_steps > 0, "iteration_steps must be positive")
        _check(self.temperature > 0, "temperature must be positive")
        _check(self.feature_weight >= 0, "feature_weight must be non-negative")
        _check(self.learning_rate > 0, "learning_rate must be positive")
        _check(self.adam_epsilon > 0, "adam_epsilon must be positive")
        _validate_exploration(self)
        _check(self.env_steps_per_update > 0, "env_steps_per_update must be positive")
        _check(self.warmup_steps >= self.batch_size, "warmup_steps must cover one batch")
        _validate_replay(self)
        _check(self.monitor_episodes > 0, "monitor_episodes must be positive")
        _check(self.eval_episodes > 0, "eval_episodes must be positive")
        _check(0.0 <= self.eval_epsilon <= 1.0, "eval_epsilon must lie in [0, 1]")
        return self


@dataclass(frozen=True)
class ExperimentConfig(_ParamsMixin):
    """One day-night experiment: phase task sets, budgets, schedule, transfer mechanism, seeds"""

    name: str = "experiment"
    phase1_tasks: tuple = ("mini-pinball", "mini-pong")
    phase2_tasks: tuple = ("mini-pinball", "mini-pong")
    passive_tasks: tuple = None  # defaults to phase1_tasks
    cycles: int = 1
    schedule: str = "alt:episode"
    transfer: str = "transplant"
    transfer_source: str = "amn"
    baseline: bool = True
    seeds: tuple = DEFAULT_SEEDS
    workers: int = 1
    output_dir: str = None
    active: TrainConfig = field(default_factory=TrainConfig)
    passive: DistillConfig = field(default_factory=DistillConfig)

    def __post_init__(self):
        for name in ("phase1_tasks", "phase2_tasks", "seeds"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.passive_tasks is not None:
            object.__setattr__(self, "passive_tasks", tuple(self.passive_tasks))

    @property
    def consolidated_tasks(self):
        return self.passive_tasks if self.passive_tasks is not None else self.phase1_tasks

    @property
    def source_expert_task(self):
        """Task named by ``expert:<task>``, or None when transferring from the AMN"""
        if self.transfer_source.startswith("expert:"):
            return self.transfer_source.split(":", 1)[1]
        return None

    def validate(self):
        from ..models.games import TASK_IDS
        from ..models.surgery import parse_mechanism
        from ..simulation.scheduler import ScheduleStrategy

        _check(self.seeds, "At least one seed is required")
        _check(self.phase2_tasks, "The phase-2 task set must not be empty")
        _check(self.cycles >= 1, "cycles must be at least 1")
        _check(self.workers >= 1, "workers must be at least 1")
        for task in (*self.phase1_tasks, *self.phase2_tasks):
            _check(task in TASK_IDS, f"Unknown task '{task}', expected one of {list(TASK_IDS)}")
        _check(
            set(self.consolidated_tasks) <= set(self.phase1_tasks),
            "passive_tasks must be a subset of phase1_tasks",
        )
        _check(
            self.transfer_source == "amn" or self.source_expert_task in self.phase1_tasks,
            f"transfer_source must be 'amn' or 'expert:<phase-1 task>', got '{self.transfer_source}'",
        )
        try:
            ScheduleStrategy.parse(self.schedule)
            parse_mechanism(self.transfer)
        except LabError as error:
            raise ConfigError(str(error)) from error
        self.active.validate()
        self.passive.validate()
        return self

    def to_dict(self):
        data = asdict(self)
        for name in ("phase1_tasks", "phase2_tasks", "seeds"):
            data[name] = list(data[name])
        if data["passive_tasks"] is not None:
            data["passive_tasks"] = list(data["passive_tasks"])
        return data

    def config_hash(self):
        """Hash of everything that shapes results; seeds, workers and output location excluded"""
        data = self.to_dict()
        for name in ("seeds", "workers", "output_dir"):
            data.pop(name)
        return _hash(data)

    @classmethod
    def from_dict(cls, data):
        data = dict(data or {})
        active = TrainConfig.from_dict(data.pop("active", None))
        passive = DistillConfig.from_dict(data.pop("passive", None))
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"Unknown ExperimentConfig fields: {sorted(unknown)}")
        return cls(active=active, passive=passive, **data).validate()

    @classmethod
    def from_yaml(cls, path):
        path = Path(path)
        try:
            with open(path, "r", encoding="utf-8") as handle:
                data = yaml.safe_load(handle)
        except (OSError, yaml.YAMLError) as error:
            raise ConfigError(f"Cannot read experiment config {path}: {error}") from error
        if data is not None and not isinstance(data, dict):
            raise ConfigError(f"{path} must contain a mapping")
        return cls.from_dict(data)

    def to_yaml(self, path):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as handle:
            yaml.safe_dump(self.to_dict(), handle, sort_keys=True)
