"""
Active phase: one expert per task trained with double Q-learning, n-step returns, proportional
prioritized replay and a periodically synced target network.
"""

import math
from collections import deque

import numpy as np

from ..errors import ShapeError
from ..models.artifacts import ExpertCheckpoint
from ..models.games import get_game, get_task
from ..models.losses import huber_td_loss
from ..models.optim import AdamState, adam_step
from ..models.qfunction import copy_params, q_backward, q_forward, q_values
from ..utils.logger import get_logger
from ..utils.metric_log import MetricLog
from ..utils.replay import PrioritizedReplayBuffer, Transition
from ..utils.seeding import derive_seed
from ..utils.stats_collector import StatsCollector
from ..utils.train_params import TrainConfig
from .evaluation import baseline_stats, evaluate_policy

logger = get_logger(__name__)


def epsilon(step, config):
    """Linear exploration schedule from epsilon_start to epsilon_end, then constant"""
    if step >= config.epsilon_anneal_steps:
        return config.epsilon_end
    fraction = step / config.epsilon_anneal_steps
    return config.epsilon_start + fraction * (config.epsilon_end - config.epsilon_start)


def beta(step, total_steps, start, end):
    """Importance-sampling exponent annealed linearly over the phase"""
    if total_steps <= 0:
        return end
    return start + min(1.0, step / total_steps) * (end - start)


def td_targets_from_q(rewards, dones, next_q_online, next_q_target, gamma, n):
    """
    Double-Q n-step targets: y = R_n + gamma^n * Q_target(s', argmax_a Q_online(s', a)),
    with no bootstrap after a terminal transition.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    next_q_target = np.asarray(next_q_target, dtype=np.float64)
    best = np.argmax(np.asarray(next_q_online), axis=-1)
    bootstrap = next_q_target[np.arange(len(best)), best]
    alive = 1.0 - np.asarray(dones, dtype=np.float64)
    return rewards + (gamma**n) * bootstrap * alive


def compute_td_targets(batch, params, target_params, gamma, n):
    return td_targets_from_q(
        batch.rewards,
        batch.dones,
        q_values(params, batch.next_obs),
        q_values(target_params, batch.next_obs),
        gamma,
        n,
    )


class NStepAccumulator:
    """Turns single-step experience into n-step transitions with discounted reward sums"""

    def __init__(self, n, gamma):
        self.n = n
        self.gamma = gamma
        self.pending = deque()

    def _emit(self, next_obs, done):
        reward = sum(self.gamma**i * r for i, (_, _, r) in enumerate(self.pending))
        obs, action, _ = self.pending.popleft()
        return Transition(obs, action, reward, next_obs, done)

    def push(self, obs, action, reward, next_obs, done):
        """@return The transitions completed by this step."""
        self.pending.append((obs, action, reward))
        ready = []
        if done:
            while self.pending:
                ready.append(self._emit(next_obs, True))
        elif len(self.pending) == self.n:
            ready.append(self._emit(next_obs, False))
        return ready


class ExpertTrainer:
    """Trains one expert on one task; deterministic in (task, initial params, config, seed)"""

    def __init__(self, task, init_params, config=None, seed=0):
        self.task = get_task(task)
        self.game = get_game(task)
        self.config = (config or TrainConfig()).validate()
        self.seed = int(seed)
        if init_params.spec.head_width != self.task.action_count:
            raise ShapeError(
                f"Head width {init_params.spec.head_width} does not match "
                f"{self.task.task_id} action count {self.task.action_count}"
            )

        self.init_params = init_params
        self.online = init_params
        self.target = copy_params(init_params)
        self.adam = AdamState.fresh(
            init_params.trainable_tensors(), self.config.learning_rate, eps=self.config.adam_epsilon
        )
        self.buffer = PrioritizedReplayBuffer(
            self.config.replay_capacity,
            alpha=self.config.priority_alpha,
            seed=derive_seed(seed, "replay", self.task.task_id),
        )
        self.rng = np.random.default_rng(derive_seed(seed, "exploration", self.task.task_id))
        self.accumulator = NStepAccumulator(self.config.n_step, self.config.gamma)
        self.stats = StatsCollector()
        self.log = MetricLog(self.task.task_id)

        self.positions = np.full(max(self.task.action_subset) + 1, -1, dtype=np.int64)
        self.positions[list(self.task.action_subset)] = np.arange(self.task.action_count)
        self.env_steps = 0
        self.episodes = 0
        self.syncs = 0
        self.last_loss = math.nan

    def _episode_seed(self):
        return derive_seed(self.seed, "episode", self.task.task_id, self.episodes)

    def act(self, obs, eps):
        if self.rng.random() < eps:
            position = int(self.rng.integers(self.task.action_count))
        else:
            position = int(np.argmax(q_values(self.online, obs)))
        return self.task.action_subset[position]

    def learn(self):
        cfg = self.config
        batch = self.buffer.sample(
            cfg.batch_size,
            beta=beta(self.env_steps, cfg.total_steps, cfg.beta_start, cfg.beta_end),
        )
        targets = compute_td_targets(batch, self.online, self.target, cfg.gamma, cfg.n_step)
        out = q_forward(self.online, batch.obs)
        loss, d_q, errors = huber_td_loss(
            out.q, self.positions[batch.actions], targets, batch.weights, cfg.huber_delta
        )
        grads = q_backward(self.online, out.cache, d_q)
        self.online, self.adam = adam_step(self.online, grads, self.adam)
        self.buffer.update_priorities(batch.indices, np.abs(errors))
        self.last_loss = loss
        return loss

    def sync_target(self):
        self.target = copy_params(self.online)
        self.syncs += 1

    def _close_iteration(self, iteration, eps, syncs_before):
        record = self.stats.close_iteration(iteration, self.env_steps, eps)
        self.log.append(record)
        if self.syncs > syncs_before:
            self.log.annotate(iteration, f"target-sync:{self.syncs - syncs_before}")
        logger.info(
            f"[{self.task.task_id}] iteration {iteration}: steps {self.env_steps}, "
            f"mean return {record.mean_return:.3f}, episodes {record.episodes}, epsilon {eps:.3f}"
        )

    def evaluate(self, params):
        cfg = self.config
        return evaluate_policy(
            params,
            self.task,
            cfg.eval_episodes,
            cfg.eval_epsilon,
            derive_seed(self.seed, "greedy-eval", self.task.task_id),
        )

    def run(self):
        cfg = self.config
        initial = self.evaluate(self.init_params)
        self.log.annotate(0, f"initial-evaluation:{initial.mean!r}")
        logger.info(
            f"[{self.task.task_id}] training for {cfg.total_steps} steps, initial greedy score {initial.mean:.3f}"
        )

        state, obs = self.game.reset(self._episode_seed())
        iteration, syncs_before = 0, 0
        eps = epsilon(0, cfg)
        while self.env_steps < cfg.total_steps:
            eps = epsilon(self.env_steps, cfg)
            action = self.act(obs, eps)
            state, next_obs, reward, done = self.game.step(state, action)
            for transition in self.accumulator.push(obs, action, reward, next_obs, done):
                self.buffer.push(transition)
            if done:
                self.stats.record_episode(state.episode_return, state.tick)
                self.episodes += 1
                state, next_obs = self.game.reset(self._episode_seed())
            obs = next_obs
            self.env_steps += 1

            if (
                self.env_steps > cfg.warmup_steps
                and self.env_steps % cfg.learn_every == 0
                and len(self.buffer) >= cfg.batch_size
            ):
                self.learn()
            if self.env_steps % cfg.target_sync_steps == 0:
                self.sync_target()
            if self.env_steps % cfg.iteration_steps == 0 or self.env_steps == cfg.total_steps:
                iteration += 1
                self._close_iteration(iteration, eps, syncs_before)
                syncs_before = self.syncs

        final = self.evaluate(self.online)
        baseline = baseline_stats(self.task.task_id, cfg.baseline_episodes, self.seed)
        summary = self.stats.get_summary()
        logger.info(
            f"[{self.task.task_id}] final greedy score {final.mean:.3f} "
            f"(random {baseline.mean:.3f} ± {baseline.std:.3f}), "
            f"{summary['episodes']} training episodes, best return {summary['max_return']:.3f}"
        )
        return ExpertCheckpoint(
            task_id=self.task.task_id,
            params=self.online,
            adam=self.adam,
            final_score=final.mean,
            log=self.log,
            final_std=final.std,
            initial_score=initial.mean,
            random_mean=baseline.mean,
            random_std=baseline.std,
            seed=self.seed,
        )


def train_expert(task, init_params, config=None, seed=0):
    """@return ExpertCheckpoint with one MetricLog record per iteration."""
    return ExpertTrainer(task, init_params, config, seed).run()
