"""
Day-night cycle driver: active phase -> passive phase -> next active phase, with every checkpoint
and metric log persisted under runs/<config-hash>/<seed>/.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import pandas as pd

from ..config import LAB_DIR_ENV, RUNS_DIR
from ..errors import ConfigError
from ..models.surgery import init_for_task, last_layer_weight_histogram, parse_mechanism, write_histogram_csv
from ..utils import checkpoint as checkpoint_io
from ..utils.logger import get_logger
from ..utils.seeding import derive_seed
from ..visualization.statistics import asymptotic_gain, jumpstart
from .active import train_expert
from .passive import consolidate

logger = get_logger(__name__)

SUMMARY_COLUMNS = ["task", "phase", "final_score", "initial_score", "jumpstart", "asymptotic_gain"]
BASELINE_PHASE = "baseline"


def run_root(config=None):
    """Run-directory root: the config's output_dir, else $CONSOL_LAB_DIR, else ./runs"""
    if config is not None and config.output_dir:
        return Path(config.output_dir)
    return Path(os.environ.get(LAB_DIR_ENV) or RUNS_DIR)


def run_directory(config, seed, root=None):
    return Path(root or run_root(config)) / config.config_hash() / str(seed)


@dataclass
class CycleResult:
    """Everything one (config, seed) run produced, keyed by phase name"""

    config: object
    seed: int
    directory: Path
    experts: dict = field(default_factory=dict)  # phase -> {task id: ExpertCheckpoint}
    amns: dict = field(default_factory=dict)  # passive phase -> AMNCheckpoint
    summary: pd.DataFrame = None

    def phase_names(self):
        return list(self.experts) + list(self.amns)


def _train_task(job):
    """Process-pool entry point; also used for serial execution"""
    task_id, mechanism, source, active_config, seed = job
    init = init_for_task(mechanism, source, task_id, seed)
    return train_expert(task_id, init, active_config, seed)


def run_active_phase(tasks, source=None, config=None, seed=0, phase_label="phase1", mechanism="none", workers=1):
    """
    Train one expert per task. Each task's initialisation and training streams derive from
    (seed, phase_label, task), so the presence of other tasks never changes them.
    @param source AMNCheckpoint or ExpertCheckpoint to transfer from, or None for random init.
    @return {task id: ExpertCheckpoint} in task order.
    """
    tasks = list(tasks)
    if not tasks:
        raise ConfigError("An active phase needs at least one task")
    mechanism = parse_mechanism(mechanism)
    jobs = [(task_id, mechanism, source, config, derive_seed(seed, phase_label, task_id)) for task_id in tasks]
    logger.info(f"Active phase {phase_label}: {', '.join(tasks)} (init {mechanism}, workers {workers})")

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_train_task, jobs))
    else:
        results = [_train_task(job) for job in jobs]
    return dict(zip(tasks, results))


def _write_expert(directory, expert, config_hash):
    directory.mkdir(parents=True, exist_ok=True)
    expert.config_hash = config_hash
    checkpoint_io.save(expert, directory / "checkpoint")
    expert.log.write_csv(directory / "metrics.csv")
    if expert.is_lateral:
        write_histogram_csv(last_layer_weight_histogram(expert.params), directory / "weight_histogram.csv")


def _write_amn(directory, amn, config_hash):
    amn.config_hash = config_hash
    checkpoint_io.save(amn, directory / "amn" / "checkpoint")
    for task_id, log in amn.logs.items():
        (directory / task_id).mkdir(parents=True, exist_ok=True)
        log.write_csv(directory / task_id / "metrics.csv")


def _summary_rows(phase, experts, baselines=None):
    rows = []
    for task_id, expert in experts.items():
        baseline = (baselines or {}).get(task_id)
        gain = start = math.nan
        if baseline is not None and len(expert.log) and len(baseline.log):
            start = jumpstart(expert.log, baseline.log)
            gain = asymptotic_gain(expert.log, baseline.log)
        rows.append(
            {
                "task": task_id,
                "phase": phase,
                "final_score": expert.final_score,
                "initial_score": expert.initial_score,
                "jumpstart": start,
                "asymptotic_gain": gain,
            }
        )
    return rows


def _write_summary(directory, rows):
    summary = pd.DataFrame(rows, columns=SUMMARY_COLUMNS)
    summary.to_csv(directory / "summary.csv", index=False, na_rep="", lineterminator="\n")
    return summary


def _transfer_source(config, previous_experts, amn):
    task = config.source_expert_task
    if task is None:
        return amn
    if task not in previous_experts:
        raise ConfigError(f"Transfer source expert '{task}' was not trained in the previous phase")
    return previous_experts[task]


def run_cycle(config, seed, root=None):
    """
    Run every phase of one experiment for one seed. Each phase's artifacts are written as soon as
    the phase finishes, so a failure leaves everything completed before it on disk.
    """
    config = config.validate()
    directory = run_directory(config, seed, root)
    directory.mkdir(parents=True, exist_ok=True)
    config_hash = config.config_hash()
    replace(config, output_dir=None).to_yaml(directory / "config.yaml")
    result = CycleResult(config, seed, directory)
    rows = []
    logger.info(f"Cycle '{config.name}' seed {seed} -> {directory}")

    try:
        experts = run_active_phase(
            config.phase1_tasks, None, config.active, seed, "phase1", "none", config.workers
        )
        for task_id, expert in experts.items():
            _write_expert(directory / "phase1" / task_id, expert, config_hash)
        result.experts["phase1"] = experts
        rows += _summary_rows("phase1", experts)
        consolidated = config.consolidated_tasks

        for cycle in range(1, config.cycles + 1):
            amn = None
            if config.source_expert_task is None:
                passive_label = f"passive{cycle}"
                amn = consolidate(
                    experts,
                    tasks=consolidated,
                    config=config.passive,
                    schedule=config.schedule,
                    seed=derive_seed(seed, passive_label),
                )
                _write_amn(directory / passive_label, amn, config_hash)
                result.amns[passive_label] = amn

            phase = f"phase{cycle + 1}"
            source = _transfer_source(config, experts, amn)
            experts = run_active_phase(
                config.phase2_tasks, source, config.active, seed, phase, config.transfer, config.workers
            )
            for task_id, expert in experts.items():
                _write_expert(directory / phase / task_id, expert, config_hash)
            result.experts[phase] = experts

            baselines = None
            if config.baseline:
                baselines = result.experts.get(BASELINE_PHASE)
                if baselines is None:
                    # same seed labels as phase 2, so only the initialisation differs
                    baselines = run_active_phase(
                        config.phase2_tasks, None, config.active, seed, "phase2", "none", config.workers
                    )
                    for task_id, expert in baselines.items():
                        _write_expert(directory / BASELINE_PHASE / task_id, expert, config_hash)
                    result.experts[BASELINE_PHASE] = baselines
                    rows += _summary_rows(BASELINE_PHASE, baselines)
            rows += _summary_rows(phase, experts, baselines)
            consolidated = tuple(experts)
    except Exception as e:
        logger.error(f"Cycle '{config.name}' seed {seed} failed: {str(e)}")
        raise
    finally:
        result.summary = _write_summary(directory, rows)

    logger.info(f"Cycle '{config.name}' seed {seed} finished")
    return result


def run_experiment(config):
    """Run the cycle for every seed of the config. @return [CycleResult] in seed order."""
    config = config.validate()
    root = run_root(config)
    return [run_cycle(config, seed, root) for seed in config.seeds]
