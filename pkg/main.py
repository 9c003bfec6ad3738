#!/usr/bin/env python3
# Consolidation lab: day-night cycles of expert training and policy consolidation
# on five miniature grid games
import argparse
import logging
import sys
from pathlib import Path

from src.config import DEFAULT_SEEDS, LOG_DIR
from src.errors import ConfigError, ScheduleError, SurgeryError
from src.models.games import TASK_IDS
from src.models.surgery import init_for_task, parse_mechanism
from src.simulation.active import train_expert
from src.simulation.cycle import run_experiment, run_root
from src.simulation.passive import consolidate
from src.simulation.scheduler import ScheduleStrategy
from src.utils import checkpoint as checkpoint_io
from src.utils.data_loader import load_runs, summary_frame
from src.utils.logger import setup_logger
from src.utils.train_params import DistillConfig, ExperimentConfig, TrainConfig
from src.utils.verification import SUITES, run_suite
from src.visualization.plots import PRESETS, render_preset
from src.visualization.reports import generate_run_report
from src.visualization.statistics import print_statistics

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFICATION = 2
EXIT_RUNTIME = 3


class UsageError(Exception):
    pass


class LabArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1"""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _schedule(text):
    try:
        return str(ScheduleStrategy.parse(text))
    except ScheduleError as e:
        raise argparse.ArgumentTypeError(str(e))


def _mechanism(text):
    try:
        return str(parse_mechanism(text))
    except SurgeryError as e:
        raise argparse.ArgumentTypeError(str(e))


def build_parser():
    parser = LabArgumentParser(prog="main.py", description="Consolidation-for-transfer lab")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("--log-dir", default=None, help=f"also log to a file in this directory (e.g. {LOG_DIR})")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("train-expert", help="train one expert from random init")
    p.add_argument("--task", required=True, choices=TASK_IDS)
    p.add_argument("--steps", type=int, default=TrainConfig().total_steps)
    p.add_argument("--seed", type=int, default=DEFAULT_SEEDS[0])
    p.add_argument("--out", type=Path, default=None)

    p = commands.add_parser("consolidate", help="distill expert checkpoints into one AMN")
    p.add_argument("--experts", nargs="+", type=Path, required=True, help="expert checkpoint directories")
    p.add_argument("--schedule", type=_schedule, default="alt:episode")
    p.add_argument("--steps", type=int, default=DistillConfig().total_steps)
    p.add_argument("--seed", type=int, default=DEFAULT_SEEDS[0])
    p.add_argument("--out", type=Path, default=None)

    p = commands.add_parser("transfer", help="train an expert initialised from an AMN or expert")
    p.add_argument("--mechanism", type=_mechanism, required=True, help="transplant | lateral | layers:K | none")
    p.add_argument("--source", type=Path, required=True, help="AMN or expert checkpoint directory")
    p.add_argument("--task", required=True, choices=TASK_IDS)
    p.add_argument("--steps", type=int, default=TrainConfig().total_steps)
    p.add_argument("--seed", type=int, default=DEFAULT_SEEDS[0])
    p.add_argument("--out", type=Path, default=None)

    p = commands.add_parser("cycle", help="run a day-night experiment from a YAML config")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--seeds", type=int, nargs="+", default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", type=Path, default=None)

    p = commands.add_parser("report", help="figures, summary and PDF from run directories")
    p.add_argument("--runs", nargs="+", type=Path, required=True)
    p.add_argument("--figure", choices=sorted(PRESETS), action="append", default=[])
    p.add_argument("--out", type=Path, default=Path("results/figures"))
    p.add_argument("--pdf", type=Path, default=None)

    p = commands.add_parser("verify", help="run a verification suite")
    p.add_argument("--suite", choices=SUITES, action="append", required=True)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _write_expert(expert, out):
    checkpoint_io.save(expert, out / "checkpoint")
    expert.log.write_csv(out / "metrics.csv")
    print(f"{expert.task_id}: final score {expert.final_score:.3f} (random {expert.random_mean:.3f}), saved to {out}")


def cmd_train_expert(args):
    config = TrainConfig().update(total_steps=args.steps)
    out = args.out or run_root() / "experts" / args.task / str(args.seed)
    expert = train_expert(args.task, init_for_task("none", None, args.task, args.seed), config, args.seed)
    _write_expert(expert, out)
    return EXIT_OK


def cmd_consolidate(args):
    experts = [checkpoint_io.load(path) for path in args.experts]
    if any(e.kind == "amn" for e in experts):
        raise ConfigError("consolidate takes expert checkpoints only")
    config = DistillConfig().update(total_steps=args.steps)
    amn = consolidate(experts, config=config, schedule=args.schedule, seed=args.seed)
    out = args.out or run_root() / "amn" / "-".join(amn.task_ids) / str(args.seed)
    checkpoint_io.save(amn, out / "amn" / "checkpoint")
    for task_id, log in amn.logs.items():
        log.write_csv(out / task_id / "metrics.csv")
        final = log.percent_of_expert[-1] if len(log) else float("nan")
        print(f"{task_id}: final percent of expert {final:.1%}")
    print(f"AMN saved to {out}")
    return EXIT_OK


def cmd_transfer(args):
    source = checkpoint_io.load(args.source)
    config = TrainConfig().update(total_steps=args.steps)
    init = init_for_task(args.mechanism, source, args.task, args.seed)
    out = args.out or run_root() / "transfer" / args.mechanism.replace(":", "-") / args.task / str(args.seed)
    expert = train_expert(args.task, init, config, args.seed)
    _write_expert(expert, out)
    print(f"{args.task}: initial score {expert.initial_score:.3f}")
    return EXIT_OK


def cmd_cycle(args):
    config = ExperimentConfig.from_yaml(args.config)
    overrides = {}
    if args.seeds:
        overrides["seeds"] = tuple(args.seeds)
    if args.workers:
        overrides["workers"] = args.workers
    if args.out:
        overrides["output_dir"] = str(args.out)
    config = config.update(**overrides)
    results = run_experiment(config)
    for result in results:
        print(f"\nSeed {result.seed} ({result.directory}):")
        print_statistics(result.summary)
    return EXIT_OK


def cmd_report(args):
    runs = load_runs(args.runs)
    print_statistics(summary_frame(runs))
    for preset in args.figure:
        path = render_preset(runs, preset, args.out)
        print(f"{preset}: {path}")
    if args.pdf:
        args.pdf.parent.mkdir(parents=True, exist_ok=True)
        generate_run_report(runs, args.pdf)
        print(f"Report generated: {args.pdf}")
    return EXIT_OK


def cmd_verify(args):
    failed = False
    for suite in args.suite:
        report = run_suite(suite, args.seed)
        print(f"\n{suite}: {'PASSED' if report.passed else 'FAILED'}")
        for check in report.checks:
            print(f"  [{'ok' if check.passed else 'FAIL'}] {check.name}: {check.detail}")
        failed |= not report.passed
    return EXIT_VERIFICATION if failed else EXIT_OK


COMMANDS = {
    "train-expert": cmd_train_expert,
    "consolidate": cmd_consolidate,
    "transfer": cmd_transfer,
    "cycle": cmd_cycle,
    "report": cmd_report,
    "verify": cmd_verify,
}


def main(argv=None):
    """Main execution function"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"Error: {str(e)}", file=sys.stderr)
        return EXIT_USAGE

    setup_logger(level=logging.DEBUG if args.verbose else logging.INFO, log_dir=args.log_dir)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"\nConfiguration error: {str(e)}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:
        print(f"\nError: {str(e)}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
