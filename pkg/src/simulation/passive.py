"""
Passive phase: consolidate several frozen experts into one AMN.

The phase runs as a SimPy process model ticking once per environment step: one collector process
per task drives that task's game with the AMN's ε-greedy actions and fills the task's prioritized
buffer; a learner process takes one consolidation step every few ticks; an iteration monitor
evaluates the AMN and records percent-of-expert.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
import simpy

from ..config import NUM_ACTIONS
from ..errors import ConfigError
from ..models import network
from ..models.artifacts import AMNCheckpoint
from ..models.games import get_game, get_task
from ..models.losses import FeatureAdapter, feature_regression_loss, policy_kl, policy_regression_loss
from ..models.optim import AdamState, adam_step
from ..models.qfunction import q_forward
from ..utils.logger import get_logger
from ..utils.metric_log import MetricLog
from ..utils.replay import PrioritizedReplayBuffer, Transition
from ..utils.seeding import derive_seed
from ..utils.stats_collector import StatsCollector
from ..utils.train_params import DistillConfig
from .active import beta, epsilon
from .evaluation import baseline_stats
from .monitor import IterationMonitor
from .scheduler import ScheduleStrategy, TaskRotation

logger = get_logger(__name__)

def adapter_names(task_id):
    return f"adapter/{task_id}/weight", f"adapter/{task_id}/bias"


@dataclass(eq=False)
class AMNState:
    """AMN parameters, per-task feature adapters and their shared Adam state"""

    params: network.NetworkParams
    adapters: dict
    adam: AdamState = None
    step: int = 0

    def trainable_tensors(self):
        tensors = dict(self.params.tensors)
        for task_id, adapter in self.adapters.items():
            w_name, b_name = adapter_names(task_id)
            tensors[w_name] = adapter.weight
            tensors[b_name] = adapter.bias
        return tensors

    def with_tensors(self, updated):
        network_updates = {k: v for k, v in updated.items() if not k.startswith("adapter/")}
        adapters = {}
        for task_id, adapter in self.adapters.items():
            w_name, b_name = adapter_names(task_id)
            adapters[task_id] = FeatureAdapter(
                task_id, updated.get(w_name, adapter.weight), updated.get(b_name, adapter.bias)
            )
        return replace(self, params=self.params.with_tensors(network_updates), adapters=adapters)


def init_amn_state(task_ids, seed, config=None, spec=None):
    """Fresh AMN over the whole action alphabet with identity adapters"""
    config = config or DistillConfig()
    spec = (spec or network.NetworkSpec()).with_head(NUM_ACTIONS)
    params = network.init_params(spec, derive_seed(seed, "amn"))
    adapters = {
        task_id: FeatureAdapter.identity(task_id, spec.feature_width, params.dtype) for task_id in task_ids
    }
    state = AMNState(params, adapters)
    state.adam = AdamState.fresh(state.trainable_tensors(), config.learning_rate, eps=config.adam_epsilon)
    return state


@dataclass
class TaskGradients:
    tensors: dict
    policy_loss: float
    feature_loss: float
    kl: np.ndarray  # per-sample policy KL, the new priorities


def task_gradients(state, teacher, task, batch, config):
    """
    Gradients of policy loss + feature_weight * feature loss for one task on one batch.
    Only the head columns of the task's actions receive gradient.
    """
    task = get_task(task)
    columns = list(task.action_subset)
    teacher_out = q_forward(teacher, batch.obs)
    student_out = network.forward(state.params, batch.obs)
    logits = student_out.q[:, columns]

    policy_loss, d_logits = policy_regression_loss(
        teacher_out.q, logits, config.temperature, weights=batch.weights
    )
    d_q = np.zeros_like(student_out.q)
    d_q[:, columns] = d_logits

    adapter = state.adapters[task.task_id]
    feature_loss, d_features, adapter_grads = feature_regression_loss(
        student_out.features, teacher_out.features, adapter, weights=batch.weights
    )
    grads = network.backward(state.params, student_out.cache, d_q, config.feature_weight * d_features)
    tensors = dict(grads.tensors)
    w_name, b_name = adapter_names(task.task_id)
    tensors[w_name] = (config.feature_weight * adapter_grads["weight"]).astype(adapter.weight.dtype)
    tensors[b_name] = (config.feature_weight * adapter_grads["bias"]).astype(adapter.bias.dtype)

    kl = policy_kl(teacher_out.q, logits, config.temperature)
    return TaskGradients(tensors, policy_loss, feature_loss, kl)


def composite_gradients(per_task):
    """Sum of per-task gradient dicts; tensors missing from a task count as zero"""
    total = {}
    for grads in per_task:
        for name, value in grads.tensors.items():
            total[name] = total[name] + value if name in total else value.copy()
    return total


def consolidation_step(state, experts, buffers, tasks, config, beta_value=1.0):
    """
    One Adam step on the summed loss of ``tasks``, one batch per task, followed by priority
    updates with the per-sample policy KL.
    @return (new AMNState, {task id: TaskGradients})
    """
    per_task = {}
    batches = {}
    for task_id in tasks:
        batch = buffers[task_id].sample(config.batch_size, beta=beta_value)
        batches[task_id] = batch
        per_task[task_id] = task_gradients(state, experts[task_id].params, task_id, batch, config)

    grads = composite_gradients(per_task.values())
    updated, adam = adam_step(state, grads, state.adam)
    for task_id, batch in batches.items():
        buffers[task_id].update_priorities(batch.indices, np.maximum(per_task[task_id].kl, 0.0))
    return replace(updated, adam=adam, step=state.step + 1), per_task


@dataclass
class Collector:
    """Per-task collection state owned by one collector process"""

    task_id: str
    state: object = None
    obs: np.ndarray = None
    episodes: int = 0
    stats: StatsCollector = field(default_factory=StatsCollector)


class PassivePhase:
    """Consolidates ``experts`` (task id -> ExpertCheckpoint) into a fresh or given AMN"""

    def __init__(self, experts, config=None, schedule="alt:episode", seed=0, amn_state=None):
        if not experts:
            raise ConfigError("Consolidation needs at least one expert")
        self.experts = dict(experts)
        self.task_ids = tuple(self.experts)
        self.config = (config or DistillConfig()).validate()
        self.strategy = ScheduleStrategy.parse(schedule)
        self.seed = int(seed)
        first = next(iter(self.experts.values()))
        self.state = amn_state or init_amn_state(
            self.task_ids, seed, self.config, spec=first.network.spec
        )

        self.env = simpy.Environment()
        self.rotation = TaskRotation(self.strategy, self.task_ids)
        self.rngs = {
            task_id: np.random.default_rng(derive_seed(seed, "amn-exploration", task_id))
            for task_id in self.task_ids
        }
        self.buffers = {
            task_id: PrioritizedReplayBuffer(
                self.config.replay_capacity,
                alpha=self.config.priority_alpha,
                seed=derive_seed(seed, "amn-replay", task_id),
            )
            for task_id in self.task_ids
        }
        self.collectors = {task_id: Collector(task_id) for task_id in self.task_ids}
        self.logs = {task_id: MetricLog(task_id) for task_id in self.task_ids}
        self.baselines = {task_id: self._baseline(task_id) for task_id in self.task_ids}
        self.expert_scores = {task_id: float(e.final_score) for task_id, e in self.experts.items()}
        self.env_steps = 0
        self.losses = {}

        for task_id in self.task_ids:
            self.env.process(self.collect(task_id))
        self.env.process(self.learn())
        self.monitor = IterationMonitor(self.env, self)

    def _baseline(self, task_id):
        expert = self.experts[task_id]
        if not math.isnan(expert.random_mean):
            return float(expert.random_mean)
        return baseline_stats(task_id, seed=self.seed).mean

    def _episode_seed(self, collector):
        return derive_seed(self.seed, "amn-episode", collector.task_id, collector.episodes)

    def epsilon(self):
        return epsilon(self.env_steps, self.config)

    def collect(self, task_id):
        """Collector process: one ε-greedy AMN step on its task per tick"""
        game = get_game(task_id)
        task = game.spec
        columns = list(task.action_subset)
        collector = self.collectors[task_id]
        rng = self.rngs[task_id]
        collector.state, collector.obs = game.reset(self._episode_seed(collector))
        while True:
            if rng.random() < self.epsilon():
                position = int(rng.integers(task.action_count))
            else:
                q = network.forward(self.state.params, collector.obs).q
                position = int(np.argmax(q[columns]))
            action = task.action_subset[position]
            state, next_obs, reward, done = game.step(collector.state, action)
            self.buffers[task_id].push(Transition(collector.obs, action, reward, next_obs, done))
            if done:
                collector.stats.record_episode(state.episode_return, state.tick)
                collector.episodes += 1
                self.rotation.on_episode_end(task_id)
                state, next_obs = game.reset(self._episode_seed(collector))
            collector.state, collector.obs = state, next_obs
            yield self.env.timeout(1)

    def learn(self):
        """Learner process: one consolidation step every env_steps_per_update ticks after warmup"""
        cfg = self.config
        while True:
            self.env_steps = int(self.env.now) + 1
            if self.env_steps >= cfg.warmup_steps and self.env_steps % cfg.env_steps_per_update == 0:
                tasks = self.rotation.tasks_for_step(self.state.step)
                self.state, per_task = consolidation_step(
                    self.state,
                    self.experts,
                    self.buffers,
                    tasks,
                    cfg,
                    beta(self.env_steps, cfg.total_steps, cfg.beta_start, cfg.beta_end),
                )
                for task_id, grads in per_task.items():
                    self.losses[task_id] = (grads.policy_loss, grads.feature_loss)
            yield self.env.timeout(1)

    def checkpoint(self):
        return AMNCheckpoint(
            params=self.state.params,
            adapters=dict(self.state.adapters),
            adam=self.state.adam,
            logs=self.logs,
            expert_scores=self.expert_scores,
            baselines=self.baselines,
            seed=self.seed,
        )

    def run(self):
        logger.info(
            f"Passive phase: consolidating {', '.join(self.task_ids)} for {self.config.total_steps} "
            f"ticks (one env step per task each), schedule {self.strategy}"
        )
        try:
            if self.config.total_steps > 0:
                self.env.run(until=self.config.total_steps)
        except Exception as e:
            logger.error(f"Passive phase failed at step {self.env_steps}: {str(e)}")
            raise
        logger.info(f"Passive phase finished after {self.state.step} consolidation steps")
        return self.checkpoint()


def consolidate(experts, tasks=None, config=None, schedule="alt:episode", seed=0):
    """
    @param experts Task id -> ExpertCheckpoint, or a list of ExpertCheckpoints.
    @param tasks Optional subset of the experts' tasks to consolidate.
    @return AMNCheckpoint with one percent-of-expert MetricLog per task.
    """
    if not isinstance(experts, dict):
        experts = {expert.task_id: expert for expert in experts}
    if tasks is not None:
        experts = {task_id: experts[task_id] for task_id in tasks}
    return PassivePhase(experts, config, schedule, seed).run()
