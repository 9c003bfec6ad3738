"""Registry of the five grid games sharing one visual grammar and one action alphabet."""

from ...errors import UnknownTaskError
from .base import (
    AGENT,
    BALL,
    DOWN,
    ENEMY,
    FIRE,
    LEFT,
    NOOP,
    RIGHT,
    SPECIAL,
    UP,
    EnvState,
    GameEnv,
    MiniGame,
    TaskSpec,
)
from .breakout import Breakout
from .carnival import Carnival
from .invaders import Invaders
from .pinball import Pinball
from .pong import Pong

GAMES = {game.spec.task_id: game for game in (Breakout(), Pong(), Invaders(), Pinball(), Carnival())}
TASK_IDS = tuple(GAMES)


def _task_id(task):
    return task.task_id if isinstance(task, TaskSpec) else str(task)


def get_game(task):
    task_id = _task_id(task)
    try:
        return GAMES[task_id]
    except KeyError:
        raise UnknownTaskError(f"Unknown task '{task_id}', expected one of {list(TASK_IDS)}") from None


def get_task(task):
    return get_game(task).spec


def list_tasks():
    return [game.spec for game in GAMES.values()]


def reset(task, seed):
    """@return (EnvState, observation) for a fresh episode."""
    return get_game(task).reset(seed)


def step(state, action):
    """@return (state', observation, reward, done)"""
    return get_game(state.task_id).step(state, action)


def make_env(task):
    return GameEnv(get_game(task))


__all__ = [
    "AGENT",
    "BALL",
    "ENEMY",
    "SPECIAL",
    "NOOP",
    "LEFT",
    "RIGHT",
    "UP",
    "DOWN",
    "FIRE",
    "EnvState",
    "GameEnv",
    "MiniGame",
    "TaskSpec",
    "GAMES",
    "TASK_IDS",
    "get_game",
    "get_task",
    "list_tasks",
    "reset",
    "step",
    "make_env",
]
