import re
from dataclasses import dataclass

from ..errors import ScheduleError

COMPOSITE = "composite"
ALTERNATE_STEPS = "alternate"
ALTERNATE_EPISODE = "alternate-episode"


@dataclass(frozen=True)
class ScheduleStrategy:
    """Which tasks' losses enter each consolidation step"""

    variant: str
    every: int = 1  # K, for step-based alternation

    def __post_init__(self):
        if self.variant not in (COMPOSITE, ALTERNATE_STEPS, ALTERNATE_EPISODE):
            raise ScheduleError(f"Unknown schedule variant '{self.variant}'")
        if self.every < 1:
            raise ScheduleError(f"Alternation period must be at least 1, got {self.every}")

    @classmethod
    def parse(cls, text):
        """Parse 'composite', 'alt:K' or 'alt:episode'"""
        if isinstance(text, ScheduleStrategy):
            return text
        text = str(text).strip().lower()
        if text == COMPOSITE:
            return cls(COMPOSITE)
        if text == "alt:episode":
            return cls(ALTERNATE_EPISODE)
        match = re.fullmatch(r"alt:(\d+)", text)
        if match:
            return cls(ALTERNATE_STEPS, int(match.group(1)))
        raise ScheduleError(f"Unknown schedule '{text}', expected composite, alt:K or alt:episode")

    @property
    def is_composite(self):
        return self.variant == COMPOSITE

    def __str__(self):
        if self.variant == ALTERNATE_STEPS:
            return f"alt:{self.every}"
        if self.variant == ALTERNATE_EPISODE:
            return "alt:episode"
        return COMPOSITE


class TaskRotation:
    """
    Tracks the active task of an alternating schedule. Step-based rotation is round-robin every K
    consolidation steps; episode-based rotation moves on when the active task's episode ends.
    """

    def __init__(self, strategy, task_ids):
        if not task_ids:
            raise ScheduleError("At least one task is needed for a schedule")
        self.strategy = ScheduleStrategy.parse(strategy)
        self.task_ids = tuple(task_ids)
        self.index = 0
        self.switches = []  # consolidation steps at which the active task changed
        self._pending_switch = False

    @property
    def active_task(self):
        return self.task_ids[self.index]

    def tasks_for_step(self, step):
        """Tasks whose losses are summed at consolidation step ``step``"""
        if self.strategy.is_composite:
            return list(self.task_ids)
        if self.strategy.variant == ALTERNATE_STEPS:
            index = (step // self.strategy.every) % len(self.task_ids)
            if index != self.index:
                self.index = index
                self.switches.append(step)
        elif self._pending_switch:
            self._pending_switch = False
            self.switches.append(step)
        return [self.active_task]

    def on_episode_end(self, task_id):
        if self.strategy.variant == ALTERNATE_EPISODE and task_id == self.active_task:
            self.index = (self.index + 1) % len(self.task_ids)
            self._pending_switch = True


def task_sequence(strategy, task_ids, steps, episode_lengths=()):
    """
    Active task per consolidation step, for alternating schedules. For the episode variant,
    ``episode_lengths`` gives the length in steps of each successive episode of the active task.
    """
    rotation = TaskRotation(strategy, task_ids)
    boundaries, total = set(), 0
    for length in episode_lengths:
        total += length
        boundaries.add(total)
    sequence = []
    for step in range(steps):
        if step in boundaries:
            rotation.on_episode_end(rotation.active_task)
        sequence.append(rotation.tasks_for_step(step)[0])
    return sequence
