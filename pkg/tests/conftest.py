import numpy as np
import pytest

from src.config import LAB_DIR_ENV
from src.models.network import NetworkSpec
from src.simulation.cycle import run_experiment
from src.utils.train_params import DistillConfig, ExperimentConfig, TrainConfig


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow reproduction tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def tiny_train():
    return TrainConfig(
        total_steps=300,
        iteration_steps=100,
        epsilon_anneal_steps=200,
        target_sync_steps=50,
        batch_size=16,
        warmup_steps=64,
        replay_capacity=500,
        eval_episodes=2,
        baseline_episodes=4,
    ).validate()


def tiny_distill():
    return DistillConfig(
        total_steps=200,
        iteration_steps=100,
        batch_size=16,
        warmup_steps=32,
        epsilon_anneal_steps=100,
        replay_capacity=300,
        monitor_episodes=1,
        eval_episodes=2,
    ).validate()


def tiny_experiment(**overrides):
    config = ExperimentConfig(
        name="tiny",
        phase1_tasks=("mini-pong", "mini-breakout"),
        phase2_tasks=("mini-pong",),
        seeds=(0,),
        active=tiny_train(),
        passive=tiny_distill(),
    )
    return config.update(**overrides)


@pytest.fixture
def reduced_spec():
    return NetworkSpec.reduced()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_train_config():
    return tiny_train()


@pytest.fixture
def tiny_distill_config():
    return tiny_distill()


@pytest.fixture
def run_root(tmp_path, monkeypatch):
    root = tmp_path / "runs"
    monkeypatch.setenv(LAB_DIR_ENV, str(root))
    return root


@pytest.fixture(scope="session")
def completed_runs(tmp_path_factory):
    """Two seeds of a tiny cycle, shared by the loader, report and CLI tests"""
    root = tmp_path_factory.mktemp("completed") / "runs"
    results = run_experiment(tiny_experiment(seeds=(0, 1), output_dir=str(root)))
    return root, results


@pytest.fixture
def make_experiment():
    return tiny_experiment
