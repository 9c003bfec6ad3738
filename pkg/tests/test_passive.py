import logging
import math

import numpy as np
import pytest

from src.errors import ConfigError
from src.models.artifacts import ExpertCheckpoint
from src.models.games import get_task
from src.models.network import NetworkSpec, init_params
from src.models.optim import AdamState
from src.simulation.evaluation import percent_of_expert
from src.simulation.passive import (
    PassivePhase,
    adapter_names,
    composite_gradients,
    consolidate,
    consolidation_step,
    init_amn_state,
    task_gradients,
)
from src.utils.replay import PrioritizedReplayBuffer, SampledBatch, Transition
from src.utils.train_params import DistillConfig

TASKS = ("mini-pong", "mini-breakout")


def make_expert(task_id, seed, spec=None, score=5.0):
    spec = (spec or NetworkSpec()).with_head(get_task(task_id).action_count)
    params = init_params(spec, seed)
    return ExpertCheckpoint(
        task_id=task_id,
        params=params,
        adam=AdamState.fresh(params.tensors, 1e-4),
        final_score=score,
        random_mean=0.0,
        random_std=1.0,
    )


def reduced_batch(rng, size=6):
    obs = rng.normal(size=(size, 4, 4, 2))
    return SampledBatch(
        obs=obs,
        actions=np.zeros(size, dtype=np.int64),
        rewards=np.zeros(size),
        next_obs=obs,
        dones=np.zeros(size, dtype=bool),
        weights=np.ones(size),
        indices=np.arange(size),
    )


@pytest.fixture
def reduced_setup(rng):
    spec = NetworkSpec.reduced()
    experts = {task_id: make_expert(task_id, i, spec) for i, task_id in enumerate(TASKS)}
    config = DistillConfig(batch_size=6, warmup_steps=6, replay_capacity=16)
    state = init_amn_state(TASKS, 3, config, spec=spec)
    batches = {task_id: reduced_batch(rng) for task_id in TASKS}
    return experts, config, state, batches


def test_head_gradient_restricted_to_task_columns(reduced_setup):
    experts, config, state, batches = reduced_setup
    grads = task_gradients(state, experts["mini-pong"].params, "mini-pong", batches["mini-pong"], config)
    outside = [a for a in range(6) if a not in get_task("mini-pong").action_subset]
    assert not grads.tensors["head.weight"][:, outside].any()
    assert not grads.tensors["head.bias"][outside].any()
    assert grads.tensors["head.weight"][:, list(get_task("mini-pong").action_subset)].any()
    assert adapter_names("mini-breakout")[0] not in grads.tensors
    assert grads.kl.shape == (6,)


def test_composite_gradient_is_sum_of_task_gradients(reduced_setup):
    experts, config, state, batches = reduced_setup
    per_task = [
        task_gradients(state, experts[t].params, t, batches[t], config) for t in TASKS
    ]
    total = composite_gradients(per_task)
    for name in state.params.tensors:
        expected = per_task[0].tensors[name] + per_task[1].tensors[name]
        np.testing.assert_allclose(total[name], expected, rtol=1e-6)
    for task_id, task_grads in zip(TASKS, per_task):
        for name in adapter_names(task_id):
            np.testing.assert_array_equal(total[name], task_grads.tensors[name])


def test_single_task_step_leaves_other_adapter_alone(reduced_setup, rng):
    experts, config, state, _ = reduced_setup
    buffers = {}
    for task_id in TASKS:
        buffer = PrioritizedReplayBuffer(16, obs_shape=(4, 4, 2), seed=1)
        for _ in range(8):
            obs = (rng.random((4, 4, 2)) < 0.5).astype(np.float32)
            buffer.push(Transition(obs, 0, 0.0, obs, False))
        buffers[task_id] = buffer

    updated, per_task = consolidation_step(state, experts, buffers, ["mini-pong"], config)
    assert list(per_task) == ["mini-pong"]
    assert updated.step == 1
    idle = updated.adapters["mini-breakout"]
    np.testing.assert_array_equal(idle.weight, state.adapters["mini-breakout"].weight)
    np.testing.assert_array_equal(idle.bias, state.adapters["mini-breakout"].bias)
    assert not np.array_equal(updated.params.tensors["head.weight"], state.params.tensors["head.weight"])
    # priorities now hold the per-sample policy KL
    assert not np.allclose(buffers["mini-pong"].priorities[:8], 1.0)
    np.testing.assert_array_equal(buffers["mini-breakout"].priorities[:8], 1.0)


def test_zero_budget_leaves_amn_at_initialisation(tiny_distill_config):
    experts = {task_id: make_expert(task_id, i) for i, task_id in enumerate(TASKS)}
    amn = consolidate(experts, config=tiny_distill_config.update(total_steps=0), seed=7)
    fresh = init_amn_state(TASKS, 7, tiny_distill_config)
    for name, value in fresh.params.tensors.items():
        np.testing.assert_array_equal(amn.params.tensors[name], value)
    assert all(len(log) == 0 for log in amn.logs.values())
    assert amn.task_ids == TASKS


def test_consolidation_is_deterministic(tiny_distill_config):
    experts = [make_expert(task_id, i) for i, task_id in enumerate(TASKS)]
    a = consolidate(experts, config=tiny_distill_config, schedule="alt:1", seed=2)
    b = consolidate(experts, config=tiny_distill_config, schedule="alt:1", seed=2)
    for name in a.params.tensors:
        np.testing.assert_array_equal(a.params.tensors[name], b.params.tensors[name])
    for task_id in TASKS:
        assert a.logs[task_id].to_frame().equals(b.logs[task_id].to_frame())


def test_iteration_logs_carry_percent_of_expert(tiny_distill_config):
    experts = [make_expert(task_id, i) for i, task_id in enumerate(TASKS)]
    amn = consolidate(experts, config=tiny_distill_config, schedule="composite", seed=0)
    for task_id in TASKS:
        log = amn.logs[task_id]
        assert list(log.iterations) == [1, 2]
        assert list(log.column("env_steps")) == [100, 200]
        assert np.isfinite(log.percent_of_expert).all()
    assert amn.expert_scores == {task_id: 5.0 for task_id in TASKS}


def test_consolidate_task_subset(tiny_distill_config):
    experts = [make_expert(task_id, i) for i, task_id in enumerate(TASKS)]
    amn = consolidate(experts, tasks=["mini-breakout"], config=tiny_distill_config.update(total_steps=0))
    assert amn.task_ids == ("mini-breakout",)


def collect_only(config, task_ids, seed=4):
    """Run a passive phase that never learns, so collection depends only on exploration"""
    config = config.update(total_steps=60, warmup_steps=100, epsilon_start=1.0, epsilon_end=1.0)
    experts = {task_id: make_expert(task_id, i) for i, task_id in enumerate(task_ids)}
    phase = PassivePhase(experts, config, seed=seed)
    phase.run()
    return phase


def test_collector_streams_do_not_depend_on_other_tasks(tiny_distill_config):
    alone = collect_only(tiny_distill_config, ("mini-breakout",)).buffers["mini-breakout"]
    together = collect_only(tiny_distill_config, ("mini-pong", "mini-breakout")).buffers["mini-breakout"]
    assert len(alone) == len(together)
    for index in range(len(alone)):
        a, b = alone.get(index), together.get(index)
        assert a.action == b.action
        np.testing.assert_array_equal(a.obs, b.obs)


def test_budget_counts_steps_of_every_task(tiny_distill_config):
    phase = collect_only(tiny_distill_config, TASKS)
    assert phase.env_steps == 60
    assert all(len(phase.buffers[task_id]) == 60 for task_id in TASKS)


def test_no_experts_rejected():
    with pytest.raises(ConfigError):
        PassivePhase({})


@pytest.mark.parametrize(
    "amn, expert, baseline, expected",
    [
        (5.0, 10.0, 0.0, 0.5),
        (10.0, 10.0, 0.0, 1.0),
        (3.0, 5.0, 1.0, 0.5),
        (-1.0, 3.0, -3.0, 1.0 / 3.0),
        (12.0, 10.0, 0.0, 1.2),
    ],
)
def test_percent_of_expert(amn, expert, baseline, expected):
    assert percent_of_expert(amn, expert, baseline) == pytest.approx(expected)


def test_percent_of_expert_undefined_when_expert_is_not_better_than_random():
    assert math.isnan(percent_of_expert(1.0, 2.0, 2.0))
    assert math.isnan(percent_of_expert(1.0, 1.0, 2.0))


def test_undefined_percent_warns_once_per_owner(caplog):
    warned = set()
    with caplog.at_level(logging.WARNING):
        percent_of_expert(1.0, 1.0, 2.0, warned)
        percent_of_expert(1.0, 1.0, 2.0, warned)
        percent_of_expert(1.0, 1.0, 2.0, set())
    messages = [r.getMessage() for r in caplog.records if "undefined" in r.getMessage()]
    assert len(messages) == 2
    assert warned == {(1.0, 2.0)}
