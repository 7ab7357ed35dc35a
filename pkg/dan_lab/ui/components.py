"""Reusable UI components built with rich."""

import numpy as np
from rich.align import Align
from rich.console import Group
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

from .charts import format_duration, modes_color, sparkline


def create_run_header(cfg):
    """Top header summarizing an experiment config."""
    train = cfg.train
    table = Table.grid(padding=(0, 2))
    for _ in range(5):
        table.add_column(justify="left")
    table.add_row(
        Text("Profile: ", style="dim") + Text(cfg.name, style="bold cyan"),
        Text("Mode: ", style="dim") + Text(train.xi, style="bold yellow"),
        Text("λ1/λ2: ", style="dim") + Text(f"{train.lambda1:g}/{train.lambda2:g}", style="bold green"),
        Text("B/T/k: ", style="dim") + Text(f"{train.batch_size}/{train.iterations}/{train.k}", style="bold white"),
        Text("Seed: ", style="dim") + Text(str(train.seed), style="bold white"),
    )
    return Panel(table, title="DAN Lab", border_style="blue")


def create_loss_panel(trace, width=60):
    """Sparklines of the D, M and G losses over the whole run."""
    table = Table.grid(padding=(0, 1))
    table.add_column(justify="right", style="dim")
    table.add_column(justify="left")
    table.add_column(justify="right")

    for label, column, color in (("D", "loss_d", "red"), ("M", "loss_m", "magenta"), ("G", "loss_g", "cyan")):
        values = trace.column(column)
        valid = values[~np.isnan(values)]
        if len(valid) == 0:
            table.add_row(label, Text("─" * width, style="dim"), Text("n/a", style="dim"))
            continue
        table.add_row(label, Text(sparkline(values, width=width), style=color), Text(f"{valid[-1]:+.4f}"))

    return Panel(table, title=f"Losses ({len(trace)} iterations)", border_style="green")


def create_report_table(rows, n_modes, title="Evaluation"):
    """Table of EvalReport rows (dicts as produced by EvalReport.as_row)."""
    table = Table(title=title, border_style="blue")
    for column, justify in (
        ("run", "left"), ("seed", "right"), ("iter", "right"), ("modes", "right"),
        ("entropy", "right"), ("tv", "right"), ("hq", "right"), ("mmd²", "right"),
    ):
        table.add_column(column, justify=justify)

    for row in rows:
        modes = row.get("modes_captured")
        modes_text = Text("N/A", style="dim") if modes in (None, "") else Text(
            str(modes), style=modes_color(int(float(modes)), n_modes)
        )
        table.add_row(
            str(row.get("run_id", "")),
            str(row.get("seed", "")),
            str(row.get("iteration", "")),
            modes_text,
            _fmt(row.get("entropy")),
            _fmt(row.get("tv")),
            _fmt(row.get("hq_fraction")),
            _fmt(row.get("mmd2"), digits=5),
        )
    return table


def create_summary_table(summary, title="Sweep summary"):
    """Median/min/max per metric."""
    table = Table(title=title, border_style="magenta")
    table.add_column("metric", justify="left")
    table.add_column("median", justify="right")
    table.add_column("min", justify="right")
    table.add_column("max", justify="right")
    for metric, (med, lo, hi) in summary.items():
        table.add_row(metric, _fmt(med), _fmt(lo), _fmt(hi))
    return table


def create_curve_summary(ratio, flagged_count, n_points):
    """Short panel for the gradient-weighting study."""
    text = Text()
    text.append("missed/covered weight ratio: ", style="dim")
    if ratio is None or np.isnan(ratio):
        text.append("n/a", style="dim")
    else:
        text.append(f"{ratio:.3e}", style="bold green" if ratio < 0.1 else "bold red")
    text.append(f"   grid points: {n_points}", style="dim")
    if flagged_count:
        text.append(f"   flagged: {flagged_count}", style="yellow")
    return Panel(Align.center(text), title="Weighting curve", border_style="cyan")


def create_run_footer(run_dir, elapsed):
    return Group(
        Text(f"Run directory: {run_dir}", style="dim"),
        Text(f"Elapsed: {format_duration(elapsed)}", style="dim"),
    )


def _fmt(value, digits=4):
    if value is None or value == "":
        return "N/A"
    try:
        value = float(value)
    except (TypeError, ValueError):
        return str(value)
    if np.isnan(value):
        return "N/A"
    return f"{value:.{digits}f}"
