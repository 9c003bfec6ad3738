import json
import math

import numpy as np
import pytest

from src.errors import CheckpointError, CheckpointWarning
from src.models.artifacts import AMNCheckpoint, ExpertCheckpoint
from src.models.lateral import LateralExpertParams
from src.models.network import NetworkSpec, init_params
from src.models.optim import AdamState, adam_step
from src.models.surgery import make_lateral
from src.simulation.passive import init_amn_state
from src.utils import checkpoint
from src.utils.metric_log import MetricLog, MetricRecord


def trained_expert(task_id="mini-pong", seed=0):
    params = init_params(NetworkSpec().with_head(3), seed)
    adam = AdamState.fresh(params.tensors, 1e-4)
    grads = {name: np.full_like(value, 0.5) for name, value in params.tensors.items()}
    params, adam = adam_step(params, grads, adam)
    log = MetricLog(task_id)
    log.append(MetricRecord(1, 5000, -2.5, 4, 0.5))
    log.append(MetricRecord(2, 10000, math.nan, 0, 0.1))
    log.annotate(2, "target-sync:1")
    return ExpertCheckpoint(
        task_id=task_id,
        params=params,
        adam=adam,
        final_score=1.5,
        log=log,
        final_std=0.25,
        random_mean=-2.9,
        random_std=0.3,
        seed=seed,
        config_hash="abc123",
    )


def assert_tensors_equal(a, b):
    assert a.keys() == b.keys()
    for name in a:
        assert a[name].dtype == b[name].dtype
        assert np.array_equal(a[name], b[name]), name


def test_expert_round_trip_is_bit_exact(tmp_path):
    expert = trained_expert()
    path = checkpoint.save(expert, tmp_path / "pong")
    loaded = checkpoint.load(path)

    assert isinstance(loaded, ExpertCheckpoint)
    assert loaded.task_id == "mini-pong"
    assert loaded.params.spec == expert.params.spec
    assert_tensors_equal(loaded.params.tensors, expert.params.tensors)
    assert_tensors_equal(loaded.adam.m, expert.adam.m)
    assert_tensors_equal(loaded.adam.v, expert.adam.v)
    assert loaded.adam.t == 1
    assert loaded.final_score == 1.5
    assert math.isnan(loaded.initial_score)
    assert loaded.random_mean == -2.9
    assert loaded.seed == 0 and loaded.config_hash == "abc123"
    assert loaded.log.to_frame().equals(expert.log.to_frame())
    assert loaded.log.events == [(2, "target-sync:1")]


def test_manifest_is_plain_json_with_provenance(tmp_path):
    expert = trained_expert()
    expert.params.provenance["conv1.weight"] = "transplanted"
    path = checkpoint.save(expert, tmp_path / "pong")
    manifest = json.loads((path / checkpoint.MANIFEST).read_text())
    assert manifest["kind"] == "expert"
    assert manifest["provenance"]["conv1.weight"] == "transplanted"
    assert manifest["scores"]["initial_score"] is None
    assert checkpoint.load(path).params.provenance["conv1.weight"] == "transplanted"


def test_amn_round_trip(tmp_path):
    state = init_amn_state(("mini-pong", "mini-breakout"), 3)
    amn = AMNCheckpoint(
        params=state.params,
        adapters=state.adapters,
        adam=state.adam,
        expert_scores={"mini-pong": 2.0, "mini-breakout": 4.0},
        baselines={"mini-pong": -3.0, "mini-breakout": 0.5},
        seed=3,
    )
    loaded = checkpoint.load(checkpoint.save(amn, tmp_path / "amn"))
    assert isinstance(loaded, AMNCheckpoint)
    assert loaded.task_ids == ("mini-pong", "mini-breakout")
    assert_tensors_equal(loaded.params.tensors, amn.params.tensors)
    for task_id, adapter in amn.adapters.items():
        assert np.array_equal(loaded.adapters[task_id].weight, adapter.weight)
        assert np.array_equal(loaded.adapters[task_id].bias, adapter.bias)
    assert loaded.baselines == amn.baselines
    assert loaded.expert_scores == amn.expert_scores


def test_lateral_round_trip(tmp_path):
    state = init_amn_state(("mini-pong",), 1)
    amn = AMNCheckpoint(state.params, state.adapters, state.adam)
    params = make_lateral(amn, "mini-invaders", seed=2)
    expert = ExpertCheckpoint("mini-invaders", params, AdamState.fresh(params.trainable_tensors(), 1e-4), 0.0)
    loaded = checkpoint.load(checkpoint.save(expert, tmp_path / "lateral"))
    assert isinstance(loaded.params, LateralExpertParams)
    assert loaded.kind == "lateral-expert"
    assert np.array_equal(loaded.params.lateral_weight, params.lateral_weight)
    assert_tensors_equal(loaded.params.amn.tensors, params.amn.tensors)
    assert loaded.params.column_provenance == params.column_provenance


def test_truncated_tensor_names_the_tensor(tmp_path):
    path = checkpoint.save(trained_expert(), tmp_path / "pong")
    tensor_file = path / checkpoint.TENSOR_DIR / "network__dense1.weight.f32"
    data = tensor_file.read_bytes()
    tensor_file.write_bytes(data[: len(data) // 2])
    with pytest.raises(CheckpointError) as info:
        checkpoint.load(path)
    assert info.value.tensor_name == "network/dense1.weight"


def test_missing_manifest_raises(tmp_path):
    with pytest.raises(CheckpointError):
        checkpoint.load(tmp_path / "nowhere")


def test_edited_task_id_loads_with_warning(tmp_path):
    path = checkpoint.save(trained_expert(), tmp_path / "pong")
    manifest_path = path / checkpoint.MANIFEST
    manifest = json.loads(manifest_path.read_text())
    manifest["task_ids"] = ["mini-breakout"]
    manifest_path.write_text(json.dumps(manifest))
    with pytest.warns(CheckpointWarning):
        loaded = checkpoint.load(path)
    assert loaded.task_id == "mini-breakout"


def test_unexpected_config_hash_warns(tmp_path):
    path = checkpoint.save(trained_expert(), tmp_path / "pong")
    with pytest.warns(CheckpointWarning):
        checkpoint.load(path, expected_config_hash="fff000")


def small_amn(task_ids=("mini-pong", "mini-breakout"), seed=3):
    state = init_amn_state(task_ids, seed)
    return AMNCheckpoint(state.params, state.adapters, state.adam, seed=seed)


def test_edited_amn_task_id_loads_with_warning(tmp_path):
    path = checkpoint.save(small_amn(), tmp_path / "amn")
    manifest_path = path / checkpoint.MANIFEST
    manifest = json.loads(manifest_path.read_text())
    manifest["task_ids"] = ["mini-pong", "mini-invaders"]
    manifest_path.write_text(json.dumps(manifest))
    with pytest.warns(CheckpointWarning, match="mini-invaders"):
        loaded = checkpoint.load(path)
    assert loaded.task_ids == ("mini-pong", "mini-breakout")


def test_amn_with_missing_adapter_bias_raises(tmp_path):
    path = checkpoint.save(small_amn(("mini-pong",)), tmp_path / "amn")
    manifest_path = path / checkpoint.MANIFEST
    manifest = json.loads(manifest_path.read_text())
    del manifest["tensors"]["adapter/mini-pong/bias"]
    manifest_path.write_text(json.dumps(manifest))
    with pytest.raises(CheckpointError) as info:
        checkpoint.load(path)
    assert info.value.tensor_name == "adapter/mini-pong/bias"


def test_lateral_keeps_amn_provenance(tmp_path):
    amn = small_amn(("mini-pong",), seed=1)
    amn.params.provenance["conv1.weight"] = "transplanted"
    params = make_lateral(amn, "mini-invaders", seed=2)
    expert = ExpertCheckpoint("mini-invaders", params, AdamState.fresh(params.trainable_tensors(), 1e-4), 0.0)
    loaded = checkpoint.load(checkpoint.save(expert, tmp_path / "lateral"))
    assert loaded.params.amn.provenance == params.amn.provenance
    assert loaded.params.amn.provenance["conv1.weight"] == "transplanted"
