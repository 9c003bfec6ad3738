"""Episode rollouts for greedy, random and scripted policies."""

import functools
import math
from dataclasses import dataclass

import numpy as np

from ..config import BASELINE_EPISODES, EVAL_EPISODES, EVAL_EPSILON, NUM_ACTIONS
from ..errors import ShapeError
from ..models.games import get_game, get_task
from ..models.qfunction import greedy_actions
from ..utils.logger import get_logger
from ..utils.seeding import derive_seed

logger = get_logger(__name__)


@dataclass
class EvaluationResult:
    mean: float
    std: float
    returns: np.ndarray

    @property
    def episodes(self):
        return len(self.returns)


def head_columns(params, task):
    """
    Head columns holding the task's actions, in subset order.
    None when the head is already the task's own (one column per subset action).
    """
    task = get_task(task)
    width = params.spec.head_width
    if width == task.action_count:
        return None
    if width == NUM_ACTIONS:
        return list(task.action_subset)
    raise ShapeError(f"Head width {width} fits neither {task.task_id} nor the full action alphabet")


def _rollout(task, episodes, seed, label, choose):
    """
    Run ``episodes`` episodes in lockstep. ``choose(states, obs, active)`` returns one global action
    id per active episode.
    """
    game = get_game(task)
    states, observations = [], []
    for index in range(episodes):
        state, obs = game.reset(derive_seed(seed, label, game.spec.task_id, index))
        states.append(state)
        observations.append(obs)

    returns = np.zeros(episodes, dtype=np.float64)
    active = list(range(episodes))
    while active:
        actions = choose(states, observations, active)
        for index, action in zip(active, actions):
            states[index], observations[index], reward, _ = game.step(states[index], int(action))
            returns[index] += reward
        active = [i for i in active if not states[i].done]
    return EvaluationResult(float(returns.mean()), float(returns.std()), returns)


def evaluate_policy(params, task, episodes=EVAL_EPISODES, epsilon=EVAL_EPSILON, seed=0):
    """
    ε-greedy evaluation of an expert, a lateral expert or the AMN (restricted to the task's actions).
    """
    task = get_task(task)
    columns = head_columns(params, task)
    rng = np.random.default_rng(derive_seed(seed, "evaluation-policy", task.task_id))
    subset = task.action_subset

    def choose(states, observations, active):
        greedy = greedy_actions(params, np.stack([observations[i] for i in active]), columns)
        explore = rng.random(len(active)) < epsilon
        random_positions = rng.integers(0, task.action_count, len(active))
        positions = np.where(explore, random_positions, greedy)
        return [subset[p] for p in positions]

    return _rollout(task, episodes, seed, "evaluation", choose)


def random_policy_stats(task, episodes=BASELINE_EPISODES, seed=0):
    """Mean and population std of the uniform-random policy's return"""
    task = get_task(task)
    rng = np.random.default_rng(derive_seed(seed, "random-policy", task.task_id))

    def choose(states, observations, active):
        return [task.action_subset[p] for p in rng.integers(0, task.action_count, len(active))]

    return _rollout(task, episodes, seed, "random", choose)


@functools.lru_cache(maxsize=64)
def baseline_stats(task_id, episodes=BASELINE_EPISODES, seed=0):
    """Cached random-policy baseline, shared by every phase that needs it"""
    return random_policy_stats(task_id, episodes, seed)


def scripted_policy_stats(task, episodes=BASELINE_EPISODES, seed=0):
    game = get_game(task)

    def choose(states, observations, active):
        return [game.scripted_action(states[i]) for i in active]

    return _rollout(task, episodes, seed, "scripted", choose)


def percent_of_expert(amn_score, expert_score, random_baseline=0.0, warned=None):
    """
    (amn - baseline) / (expert - baseline). NaN, with a warning, when the expert does not beat
    the random baseline.

    @param warned Optional set owned by the caller; each (expert, baseline) pair is logged once per set.
    """
    denominator = expert_score - random_baseline
    if not denominator > 0:
        key = (float(expert_score), float(random_baseline))
        if warned is None or key not in warned:
            if warned is not None:
                warned.add(key)
            logger.warning(
                f"Percent-of-expert undefined: expert score {expert_score} does not exceed "
                f"random baseline {random_baseline}"
            )
        return math.nan
    return (amn_score - random_baseline) / denominator
