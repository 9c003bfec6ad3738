import pytest

from src.errors import ConfigError
from src.utils.data_loader import collect_logs, find_runs, load_run, load_runs, runs_frame, summary_frame


def test_find_runs_at_any_depth(completed_runs):
    root, results = completed_runs
    expected = [r.directory for r in results]
    assert find_runs([root]) == expected
    assert find_runs([results[1].directory]) == [results[1].directory]


def test_missing_path_rejected(tmp_path):
    with pytest.raises(ConfigError):
        find_runs([tmp_path / "nope"])


def test_empty_tree_rejected(tmp_path):
    with pytest.raises(ConfigError):
        load_runs([tmp_path])


def test_load_run_reads_logs_and_summary(completed_runs):
    _, results = completed_runs
    run = load_run(results[0].directory)
    assert run.seed == 0
    assert run.config.config_hash() == results[0].config.config_hash()
    assert run.phases == ["baseline", "passive1", "phase1", "phase2"]
    assert sorted(run.tasks("phase1")) == ["mini-breakout", "mini-pong"]
    original = results[0].experts["phase1"]["mini-pong"].log
    assert run.logs[("phase1", "mini-pong")].to_frame().equals(original.to_frame())
    assert len(run.summary) == len(results[0].summary)


def test_collect_logs_in_seed_order(completed_runs):
    root, _ = completed_runs
    runs = load_runs([root])
    logs = collect_logs(runs, "passive1", "mini-pong")
    assert len(logs) == 2
    assert collect_logs(runs, "phase9", "mini-pong") == []


def test_frames(completed_runs):
    root, _ = completed_runs
    runs = load_runs([root])
    frame = runs_frame(runs)
    assert list(frame.columns[:4]) == ["config_hash", "seed", "phase", "task"]
    assert set(frame["seed"]) == {0, 1}
    summary = summary_frame(runs)
    assert summary.columns[0] == "seed"
    assert len(summary) == sum(len(r.summary) for r in runs)
