import io

import matplotlib.pyplot as plt
import numpy as np
from reportlab.lib import colors
from reportlab.lib.pagesizes import letter
from reportlab.lib.styles import ParagraphStyle, getSampleStyleSheet
from reportlab.platypus import Image, Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle

from ..errors import RenderError
from ..utils.data_loader import summary_frame
from ..utils.logger import get_logger
from .plots import build_figure, preset_series

logger = get_logger(__name__)


def create_table_style():
    return TableStyle(
        [
            ("BACKGROUND", (0, 0), (-1, 0), colors.grey),
            ("TEXTCOLOR", (0, 0), (-1, 0), colors.whitesmoke),
            ("ALIGN", (0, 0), (-1, -1), "CENTER"),
            ("FONTNAME", (0, 0), (-1, 0), "Helvetica-Bold"),
            ("FONTSIZE", (0, 0), (-1, 0), 10),
            ("BOTTOMPADDING", (0, 0), (-1, 0), 8),
            ("GRID", (0, 0), (-1, -1), 1, colors.black),
        ]
    )


def _fmt(value, spec="{:.3f}"):
    if value is None or (isinstance(value, float) and np.isnan(value)):
        return "-"
    return spec.format(value)


def create_chart(runs, preset):
    """PNG buffer of a curve preset for embedding in the PDF"""
    fig = build_figure(preset_series(runs, preset))
    buffer = io.BytesIO()
    try:
        fig.savefig(buffer, format="png", dpi=150, bbox_inches="tight")
    finally:
        plt.close(fig)
    buffer.seek(0)
    return buffer


def _score_table(summary):
    rows = [["Seeds", "Phase", "Task", "Final score", "Initial score", "Jumpstart", "Asymptotic gain"]]
    grouped = summary.groupby(["phase", "task"], sort=False)
    for (phase, task), group in grouped:
        rows.append(
            [
                str(group["seed"].nunique()),
                phase,
                task,
                f"{_fmt(group['final_score'].mean())} ± {_fmt(group['final_score'].std(ddof=0))}",
                _fmt(group["initial_score"].mean()),
                _fmt(group["jumpstart"].mean(), "{:+.3f}"),
                _fmt(group["asymptotic_gain"].mean(), "{:+.3f}"),
            ]
        )
    return rows


def _percent_table(runs):
    rows = [["Seed", "Phase", "Task", "Final percent of expert"]]
    for run in runs:
        for (phase, task), log in sorted(run.logs.items()):
            if phase.startswith("passive") and len(log):
                rows.append([str(run.seed), phase, task, _fmt(log.percent_of_expert[-1], "{:.1%}")])
    return rows


def generate_run_report(runs, filename):
    """PDF summary of loaded runs: scores, percent of expert, jumpstart, asymptotic gain, charts"""
    if not runs:
        raise RenderError("No runs to report on")
    doc = SimpleDocTemplate(str(filename), pagesize=letter)
    styles = getSampleStyleSheet()
    elements = []

    title_style = ParagraphStyle("CustomTitle", parent=styles["Heading1"], fontSize=16, spaceAfter=20)
    names = sorted({run.config.name for run in runs})
    elements.append(Paragraph(f"Consolidation Lab Report: {', '.join(names)}", title_style))
    elements.append(Paragraph(f"{len(runs)} run(s), seeds {sorted({r.seed for r in runs})}", styles["Normal"]))
    elements.append(Spacer(1, 20))

    summary = summary_frame(runs)
    if len(summary):
        elements.append(Paragraph("Expert Scores", styles["Heading2"]))
        table = Table(_score_table(summary))
        table.setStyle(create_table_style())
        elements.append(table)
        elements.append(Spacer(1, 20))

    percent_rows = _percent_table(runs)
    if len(percent_rows) > 1:
        elements.append(Paragraph("Consolidation", styles["Heading2"]))
        table = Table(percent_rows)
        table.setStyle(create_table_style())
        elements.append(table)
        elements.append(Spacer(1, 20))

    for preset, heading in (("fig1", "Percent of Expert During Consolidation"), ("fig3", "Transfer vs Random Initialisation")):
        try:
            chart = create_chart(runs, preset)
        except RenderError as e:
            logger.info(f"Skipping {preset} chart: {str(e)}")
            continue
        elements.append(Paragraph(heading, styles["Heading2"]))
        elements.append(Image(chart, width=450, height=280))
        elements.append(Spacer(1, 20))

    doc.build(elements)
    logger.info(f"Report written to {filename}")
    return filename
