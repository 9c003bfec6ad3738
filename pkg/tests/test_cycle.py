from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from src.errors import ConfigError
from src.simulation import cycle
from src.simulation.cycle import SUMMARY_COLUMNS, run_active_phase, run_cycle, run_directory
from src.utils import checkpoint
from src.utils.train_params import ExperimentConfig


def tree_bytes(directory):
    return {
        path.relative_to(directory).as_posix(): path.read_bytes()
        for path in sorted(Path(directory).rglob("*"))
        if path.is_file()
    }


def test_run_root_prefers_config_then_environment(run_root, make_experiment):
    assert cycle.run_root() == run_root
    assert cycle.run_root(make_experiment(output_dir="elsewhere")) == Path("elsewhere")


def test_run_root_default(monkeypatch):
    monkeypatch.delenv("CONSOL_LAB_DIR", raising=False)
    assert cycle.run_root() == Path("runs")


def test_run_directory_layout(make_experiment, tmp_path):
    config = make_experiment()
    assert run_directory(config, 3, tmp_path) == tmp_path / config.config_hash() / "3"


def test_active_phase_needs_tasks():
    with pytest.raises(ConfigError):
        run_active_phase([])


def test_task_streams_do_not_depend_on_other_tasks(tiny_train_config):
    alone = run_active_phase(["mini-pong"], config=tiny_train_config, seed=5)
    together = run_active_phase(["mini-breakout", "mini-pong"], config=tiny_train_config, seed=5)
    for name, value in alone["mini-pong"].params.tensors.items():
        assert np.array_equal(together["mini-pong"].params.tensors[name], value)


def test_cycle_writes_every_phase(completed_runs):
    root, results = completed_runs
    result = results[0]
    directory = result.directory
    assert directory.parent.parent == root
    assert (directory / "config.yaml").is_file()
    for task in ("mini-pong", "mini-breakout"):
        assert (directory / "phase1" / task / "checkpoint" / checkpoint.MANIFEST).is_file()
        assert (directory / "phase1" / task / "metrics.csv").is_file()
        assert (directory / "passive1" / task / "metrics.csv").is_file()
    assert (directory / "passive1" / "amn" / "checkpoint" / checkpoint.MANIFEST).is_file()
    assert (directory / "phase2" / "mini-pong" / "metrics.csv").is_file()
    assert (directory / "baseline" / "mini-pong" / "metrics.csv").is_file()
    assert not (directory / "phase2" / "mini-breakout").exists()

    summary = pd.read_csv(directory / "summary.csv")
    assert list(summary.columns) == SUMMARY_COLUMNS
    assert set(summary["phase"]) == {"phase1", "phase2", "baseline"}
    assert list(result.amns) == ["passive1"]


def test_saved_config_reloads_to_same_hash(completed_runs):
    _, results = completed_runs
    loaded = ExperimentConfig.from_yaml(results[0].directory / "config.yaml")
    assert loaded.output_dir is None
    assert loaded.config_hash() == results[0].config.config_hash()


def test_transplanted_expert_starts_from_amn(completed_runs):
    _, results = completed_runs
    result = results[0]
    amn = result.amns["passive1"]
    expert = checkpoint.load(result.directory / "phase2" / "mini-pong" / "checkpoint")
    assert set(expert.params.provenance.values()) == {"transplanted"}
    assert result.experts["phase2"]["mini-pong"].initial_score == expert.initial_score
    assert amn.task_ids == ("mini-pong", "mini-breakout")


def test_cycle_is_reproducible(make_experiment, tmp_path):
    config = make_experiment(phase1_tasks=("mini-pong",), baseline=False)
    first = run_cycle(config, 0, tmp_path / "a")
    second = run_cycle(config, 0, tmp_path / "b")
    assert tree_bytes(first.directory) == tree_bytes(second.directory)


def test_no_transfer_matches_baseline(make_experiment, tmp_path):
    config = make_experiment(
        phase1_tasks=("mini-pong",), transfer="none", passive=make_experiment().passive.update(total_steps=0)
    )
    result = run_cycle(config, 1, tmp_path)
    transferred, baseline = result.experts["phase2"]["mini-pong"], result.experts["baseline"]["mini-pong"]
    for name, value in baseline.params.tensors.items():
        assert np.array_equal(transferred.params.tensors[name], value)
    assert (result.directory / "phase2" / "mini-pong" / "metrics.csv").read_bytes() == (
        result.directory / "baseline" / "mini-pong" / "metrics.csv"
    ).read_bytes()
    summary = result.summary.set_index("phase")
    assert summary.loc["phase2", "jumpstart"] == 0.0
    assert summary.loc["phase2", "asymptotic_gain"] == 0.0


def test_lateral_cycle_writes_weight_histogram(make_experiment, tmp_path):
    config = make_experiment(phase1_tasks=("mini-pong",), transfer="lateral", baseline=False)
    result = run_cycle(config, 0, tmp_path)
    histogram = pd.read_csv(result.directory / "phase2" / "mini-pong" / "weight_histogram.csv")
    assert list(histogram.columns) == ["bin_left", "bin_right", "count_amn", "count_expert"]
    assert result.experts["phase2"]["mini-pong"].is_lateral


def test_expert_source_skips_consolidation(make_experiment, tmp_path):
    config = make_experiment(
        phase1_tasks=("mini-pong",),
        phase2_tasks=("mini-pinball",),
        passive_tasks=("mini-pong",),
        transfer="layers:4",
        transfer_source="expert:mini-pong",
        baseline=False,
    )
    result = run_cycle(config, 0, tmp_path)
    assert result.amns == {}
    assert not (result.directory / "passive1").exists()
    expert = result.experts["phase2"]["mini-pinball"]
    assert expert.params.provenance["dense1.weight"] == "transplanted"
    assert expert.params.provenance["head.weight"] != "transplanted"


def test_second_cycle_consolidates_previous_experts(make_experiment, tmp_path):
    config = make_experiment(phase1_tasks=("mini-pong",), cycles=2, baseline=False)
    result = run_cycle(config, 0, tmp_path)
    assert list(result.amns) == ["passive1", "passive2"]
    assert list(result.experts) == ["phase1", "phase2", "phase3"]
    assert result.amns["passive2"].task_ids == ("mini-pong",)


def test_summary_written_when_a_phase_fails(make_experiment, tmp_path, monkeypatch):
    def broken(*args, **kwargs):
        raise RuntimeError("passive phase exploded")

    monkeypatch.setattr(cycle, "consolidate", broken)
    config = make_experiment(phase1_tasks=("mini-pong",))
    with pytest.raises(RuntimeError):
        run_cycle(config, 0, tmp_path)
    directory = run_directory(config, 0, tmp_path)
    summary = pd.read_csv(directory / "summary.csv")
    assert list(summary["phase"]) == ["phase1"]
    assert (directory / "phase1" / "mini-pong" / "checkpoint" / checkpoint.MANIFEST).is_file()
