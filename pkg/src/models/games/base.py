from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from ...config import (
    ACTION_NAMES,
    EPISODE_STEP_CAP,
    GRID_SIZE,
    OBJECT_CHANNELS,
    OBSERVATION_SHAPE,
)
from ...errors import EpisodeFinishedError, InvalidActionError, ConfigError

NOOP, LEFT, RIGHT, UP, DOWN, FIRE = range(len(ACTION_NAMES))

# Object channels of one frame
AGENT, BALL, ENEMY, SPECIAL = range(OBJECT_CHANNELS)

_SEED_MASK = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class TaskSpec:
    """Static description of a mini-game"""

    task_id: str
    action_subset: tuple
    reward_range: tuple
    min_return: float = 0.0
    observation_shape: tuple = OBSERVATION_SHAPE
    step_cap: int = EPISODE_STEP_CAP

    def __post_init__(self):
        subset = self.action_subset
        if not subset:
            raise ConfigError(f"{self.task_id}: empty action subset")
        if list(subset) != sorted(set(subset)):
            raise ConfigError(f"{self.task_id}: action subset must be sorted and duplicate-free")
        if NOOP not in subset:
            raise ConfigError(f"{self.task_id}: noop must be part of the action subset")
        if subset[-1] >= len(ACTION_NAMES) or subset[0] < 0:
            raise ConfigError(f"{self.task_id}: action ids outside the global alphabet")
        if self.step_cap <= 0:
            raise ConfigError(f"{self.task_id}: step cap must be positive")

    @property
    def action_count(self):
        return len(self.action_subset)

    @property
    def action_names(self):
        return [ACTION_NAMES[a] for a in self.action_subset]

    def head_index(self, action):
        """Position of a global action id in this task's head"""
        try:
            return self.action_subset.index(action)
        except ValueError:
            raise InvalidActionError(
                f"Action {action} is not available in {self.task_id} {self.action_subset}"
            ) from None


@dataclass(frozen=True, eq=False)
class EnvState:
    """Full state of one episode; treated as immutable"""

    task_id: str
    seed: int
    tick: int
    game: object
    frame: np.ndarray  # current object frame (H, W, OBJECT_CHANNELS), uint8
    done: bool = False
    episode_return: float = 0.0


def step_rng(seed, tick):
    """Randomness for one transition, keyed on (episode seed, tick)"""
    return np.random.default_rng([int(seed) & _SEED_MASK, 0, tick])


def reset_rng(seed):
    return np.random.default_rng([int(seed) & _SEED_MASK, 1])


def empty_frame():
    return np.zeros((GRID_SIZE, GRID_SIZE, OBJECT_CHANNELS), dtype=np.uint8)


def mark(frame, channel, cells):
    for y, x in cells:
        if 0 <= y < GRID_SIZE and 0 <= x < GRID_SIZE:
            frame[y, x, channel] = 1


def stack_frames(current, previous):
    return np.concatenate([current, previous], axis=-1).astype(np.float32)


class MiniGame(ABC):
    """
    A deterministic grid game. Subclasses define the rules on a small frozen game-state object;
    this class handles ticks, step caps, action validation and frame stacking.
    """

    spec: TaskSpec

    def reset(self, seed):
        game = self.initial_state(reset_rng(seed))
        frame = self.render(game)
        state = EnvState(self.spec.task_id, int(seed), 0, game, frame)
        return state, stack_frames(frame, frame)

    def step(self, state, action):
        if state.done:
            raise EpisodeFinishedError(f"{self.spec.task_id}: episode already finished")
        if action not in self.spec.action_subset:
            raise InvalidActionError(
                f"Action {action} is not available in {self.spec.task_id} {self.spec.action_subset}"
            )
        game, reward, game_over = self.advance(
            state.game, action, step_rng(state.seed, state.tick), state.tick
        )
        tick = state.tick + 1
        done = bool(game_over or tick >= self.spec.step_cap)
        frame = self.render(game)
        new_state = EnvState(
            state.task_id, state.seed, tick, game, frame, done, state.episode_return + reward
        )
        return new_state, stack_frames(frame, state.frame), float(reward), done

    @abstractmethod
    def initial_state(self, rng):
        """@return The game state at tick 0."""

    @abstractmethod
    def advance(self, game, action, rng, tick):
        """@return (next game state, reward, game over)"""

    @abstractmethod
    def render(self, game):
        """@return uint8 frame of shape (H, W, OBJECT_CHANNELS)."""

    @abstractmethod
    def scripted_action(self, state):
        """Hand-written policy used as a sanity floor"""


class GameEnv:
    """Mutable convenience wrapper owning the state of one episode at a time"""

    def __init__(self, game):
        self.game = game
        self.state = None

    @property
    def spec(self):
        return self.game.spec

    def reset(self, seed):
        self.state, obs = self.game.reset(seed)
        return obs

    def step(self, action):
        self.state, obs, reward, done = self.game.step(self.state, action)
        return obs, reward, done
