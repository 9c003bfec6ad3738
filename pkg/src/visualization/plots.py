"""SVG figures of aggregated run curves and lateral weight histograms."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import seaborn as sns

from ..errors import RenderError
from ..utils.data_loader import collect_logs
from ..utils.logger import get_logger
from .statistics import aggregate_runs

logger = get_logger(__name__)

sns.set(style="whitegrid")
plt.rcParams["svg.hashsalt"] = "consolidation-lab"
plt.rcParams["svg.fonttype"] = "path"

FIGURE_SIZE = (8, 5)
SVG_METADATA = {"Date": None, "Creator": None}

# preset -> (title, y label, metric column)
PRESETS = {
    "fig1": ("Consolidation: percent of expert per task", "Percent of expert", "percent_of_expert"),
    "fig2": ("Consolidation schedules", "Percent of expert", "percent_of_expert"),
    "fig3": ("Transfer vs random initialisation", "Mean episode return", "mean_return"),
    "fig4": ("Lateral-connection learning curves", "Mean episode return", "mean_return"),
    "fig5": ("Transfer from different source sets and budgets", "Mean episode return", "mean_return"),
    "fig7": ("Layer-subset transfer", "Mean episode return", "mean_return"),
    "hist": ("Output-layer |w| by column source", "Count", None),
}


def build_figure(series, title="", xlabel="Iteration", ylabel="Mean episode return"):
    """
    Line chart with one mean curve and a 1σ band per AggregateSeries.
    @return matplotlib Figure (caller closes it)
    """
    series = list(series)
    if not series or any(len(s) == 0 for s in series):
        raise RenderError("Cannot render an empty series")

    fig, ax = plt.subplots(figsize=FIGURE_SIZE)
    palette = sns.color_palette("deep", len(series))
    for index, (s, color) in enumerate(zip(series, palette)):
        x = np.asarray(s.iterations, dtype=float)
        ax.plot(x, s.mean, color=color, linewidth=2, label=s.label or f"series {index + 1}", gid=f"series-{index}")
        if np.any(s.std > 0):
            ax.fill_between(x, s.mean - s.std, s.mean + s.std, color=color, alpha=0.2, gid=f"band-{index}")

    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend()
    return fig


def build_histogram_figure(frames, title=PRESETS["hist"][0]):
    """Stacked step histograms of amn-sourced vs expert-sourced output weights, one panel per run"""
    frames = list(frames)
    if not frames:
        raise RenderError("No weight histograms to render")

    fig, axes = plt.subplots(len(frames), 1, figsize=(FIGURE_SIZE[0], 2.5 * len(frames)), squeeze=False)
    for ax, (label, frame) in zip(axes[:, 0], frames):
        left = frame["bin_left"].to_numpy()
        width = np.maximum(frame["bin_right"].to_numpy() - left, 1e-12)
        ax.bar(left, frame["count_expert"], width=width, align="edge", alpha=0.6, label="expert-sourced")
        ax.bar(left, frame["count_amn"], width=width, align="edge", alpha=0.6, label="amn-sourced")
        ax.set_ylabel("Count")
        ax.set_title(label)
        ax.legend()
    axes[-1, 0].set_xlabel("|w|")
    fig.suptitle(title)
    fig.tight_layout()
    return fig


def save_figure(fig, path):
    """Write ``fig`` as SVG (byte-stable) or any other matplotlib format, then close it"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        fig.savefig(path, format=path.suffix.lstrip(".") or "svg", metadata=SVG_METADATA if path.suffix == ".svg" else None)
    finally:
        plt.close(fig)
    logger.info(f"Figure written to {path}")
    return path


def render_svg(series, path, title="", xlabel="Iteration", ylabel="Mean episode return"):
    return save_figure(build_figure(series, title, xlabel, ylabel), Path(path).with_suffix(".svg"))


def series_frame(series):
    """Long CSV-ready frame of aggregated series"""
    frames = [
        pd.DataFrame(
            {
                "label": s.label,
                "iteration": s.iterations,
                "mean": s.mean,
                "std": s.std,
                "seeds": s.seeds,
            }
        )
        for s in series
    ]
    return pd.concat(frames, ignore_index=True)


def _group_by_config(runs):
    groups = {}
    for run in runs:
        groups.setdefault(run.directory.parent.name, []).append(run)
    return list(groups.values())


def _aggregate(runs, phase, task, column, label):
    logs = collect_logs(runs, phase, task)
    if not logs:
        return None
    return aggregate_runs(logs, column, label)


def _passive_phase(runs):
    phases = sorted({p for run in runs for p in run.phases if p.startswith("passive")})
    return phases[0] if phases else None


def preset_series(runs, preset):
    """Aggregated series a preset draws from a list of loaded runs"""
    if preset not in PRESETS or preset == "hist":
        raise RenderError(f"Unknown curve preset '{preset}'")
    column = PRESETS[preset][2]
    groups = _group_by_config(runs)
    series = []
    for group in groups:
        config = group[0].config
        prefix = f"{config.name} " if len(groups) > 1 else ""
        if preset in ("fig1", "fig2"):
            phase = _passive_phase(group)
            for task in config.consolidated_tasks:
                series.append(_aggregate(group, phase, task, column, f"{prefix}{task}"))
        elif preset == "fig3":
            for task in config.phase2_tasks:
                series.append(_aggregate(group, "phase2", task, column, f"{prefix}{task} ({config.transfer})"))
                series.append(_aggregate(group, "baseline", task, column, f"{prefix}{task} (random init)"))
        elif preset == "fig4":
            phases = sorted({p for run in group for p in run.phases if p.startswith("phase") and p != "phase1"})
            for phase in phases:
                for task in config.phase2_tasks:
                    series.append(_aggregate(group, phase, task, column, f"{prefix}{task} {phase}"))
        else:
            for task in config.phase2_tasks:
                label = f"{config.name} {task}" if preset == "fig5" else f"{config.transfer} {task}"
                series.append(_aggregate(group, "phase2", task, column, label))
    series = [s for s in series if s is not None]
    if not series:
        raise RenderError(f"Runs hold no data for preset '{preset}'")
    return series


def render_preset(runs, preset, out_dir):
    """
    Write <preset>.svg and <preset>.csv for a preset into ``out_dir``.
    @return Path of the SVG.
    """
    out_dir = Path(out_dir)
    title, ylabel, _ = PRESETS.get(preset, (None, None, None))
    if title is None:
        raise RenderError(f"Unknown figure preset '{preset}'")

    if preset == "hist":
        frames = [
            (f"seed {run.seed} {phase} {task}", frame)
            for run in runs
            for (phase, task), frame in sorted(run.histograms.items())
        ]
        fig = build_histogram_figure(frames, title)
        if frames:
            table = pd.concat([frame.assign(run=label) for label, frame in frames], ignore_index=True)
            out_dir.mkdir(parents=True, exist_ok=True)
            table.to_csv(out_dir / f"{preset}.csv", index=False, lineterminator="\n")
        return save_figure(fig, out_dir / f"{preset}.svg")

    series = preset_series(runs, preset)
    out_dir.mkdir(parents=True, exist_ok=True)
    series_frame(series).to_csv(out_dir / f"{preset}.csv", index=False, na_rep="", lineterminator="\n")
    return render_svg(series, out_dir / f"{preset}.svg", title, "Iteration", ylabel)
