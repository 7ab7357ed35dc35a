"""Experiment commands: train, eval, analyze and sweep."""

import logging
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path

import numpy as np
from rich.console import Console
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeRemainingColumn

from . import config
from .core import storage
from .core.adversaries import build_generator
from .core.data import MixtureSpec, sample_mixture, sample_noise
from .core.evaluation import REPORT_COLUMNS, assign_modes, evaluate, median_bandwidth, mmd2_rbf, summarize
from .core.gradients import CURVE_COLUMNS, region_ratio, weighting_curve
from .core.training import run_training
from .errors import DanLabError, TrainingAbort, ValidationError
from .ui.components import (
    create_curve_summary,
    create_loss_panel,
    create_report_table,
    create_run_footer,
    create_run_header,
    create_summary_table,
)

log = logging.getLogger(__name__)

# generation chunk size when sampling many points from a generator
EVAL_CHUNK = 4096
# SeedSequence child index for evaluation draws (0-2 are used by training)
EVAL_STREAM = 3

AGGREGATE_COLUMNS = REPORT_COLUMNS + ["status", "error"]
SUMMARY_METRICS = ("modes_captured", "entropy", "tv", "hq_fraction", "mmd2")


def eval_rng(seed):
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(EVAL_STREAM + 1)[EVAL_STREAM])


def load_generator(cfg, checkpoint):
    """Rebuild the config's generator and load checkpointed parameters into it."""
    header, arrays = storage.load_checkpoint(checkpoint)
    generator = build_generator(cfg.networks.generator, out_act=cfg.networks.generator_out_act)
    generator.parameters().load_state(arrays)
    return generator, header


def generate(generator, noise, n_samples, rng):
    """Draw n_samples points from a generator, in chunks."""
    chunks = []
    remaining = n_samples
    while remaining > 0:
        b = min(EVAL_CHUNK, remaining)
        chunks.append(generator(sample_noise(noise, b, rng)).data)
        remaining -= b
    return np.concatenate(chunks, axis=0)


def evaluate_points(cfg, points, rng):
    """EvalReport for points against the config's mixture, MMD on a subsample."""
    settings = cfg.eval
    m = min(settings.mmd_samples, len(points))
    reference, _ = sample_mixture(cfg.data, m, rng)
    report = evaluate(
        points,
        cfg.data,
        capture_radius_sigmas=settings.capture_radius_sigmas,
        capture_min_frac=settings.capture_min_frac,
    )
    report.mmd2 = mmd2_rbf(points[:m], reference.data, median_bandwidth(reference.data))
    return report


def evaluate_checkpoint(cfg, checkpoint, n_samples=None):
    n = cfg.eval.n_samples if n_samples is None else n_samples
    if n < 1:
        raise ValidationError(f"n_samples must be at least 1, got {n}")
    generator, _ = load_generator(cfg, checkpoint)
    rng = eval_rng(cfg.train.seed)
    points = generate(generator, cfg.noise, n, rng)
    return evaluate_points(cfg, points, rng), points


def _progress(console):
    return Progress(
        TextColumn("[cyan]{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        TextColumn("{task.fields[losses]}", style="dim"),
        TimeRemainingColumn(),
        console=console,
        transient=True,
    )


def cmd_train(source, seed=None, out=None, console=None, show=True):
    """
    Train one run from a profile name or config file and write its artifacts.

    Returns:
        tuple: (run_dir Path, EvalReport of the final snapshot)
    """
    cfg = config.load_config(source)
    if seed is not None:
        cfg = config.with_seed(cfg, seed)
    return train_run(cfg, storage.output_root(out or cfg.out_dir), console, show)


def train_run(cfg, root, console=None, show=True):
    """
    Train one run of an ExperimentConfig under root.

    Writes config.json, trace.csv, snapshots/generator-<iter>.ckpt and
    report.csv (evaluation of the final snapshot) into a fresh run directory.

    Raises:
        TrainingAbort: after the partial trace and snapshots are written
    """
    console = console or Console()
    run_dir = storage.make_run_dir(root, cfg.name, cfg.train.seed)
    config.save_config(cfg, run_dir / "config.json")
    log.info("run directory %s", run_dir)

    if show:
        console.print(create_run_header(cfg))
    started = time.time()

    def write_snapshots(snapshots):
        for iteration, arrays in snapshots.items():
            storage.save_checkpoint(storage.snapshot_path(run_dir, iteration), arrays, cfg.train.seed, "generator")

    try:
        if show:
            with _progress(console) as progress:
                task = progress.add_task("training", total=cfg.train.iterations, losses="")

                def callback(state, record):
                    if record.iteration % 50 == 0 or record.iteration == cfg.train.iterations:
                        progress.update(
                            task,
                            completed=record.iteration,
                            losses=f"G {record.loss_g:+.3f}",
                        )

                state, trace, snapshots = run_training(cfg.train, cfg.data, cfg.noise, cfg.networks, callback)
        else:
            state, trace, snapshots = run_training(cfg.train, cfg.data, cfg.noise, cfg.networks)
    except TrainingAbort as abort:
        if abort.trace is not None:
            storage.write_trace(run_dir / "trace.csv", abort.trace)
        write_snapshots(abort.snapshots)
        raise

    storage.write_trace(run_dir / "trace.csv", trace)
    write_snapshots(snapshots)

    final_iter = max(snapshots)
    report, _ = evaluate_checkpoint(cfg, storage.snapshot_path(run_dir, final_iter))
    row = report.as_row(run_id=run_dir.name, seed=cfg.train.seed, iteration=final_iter)
    storage.write_csv(run_dir / "report.csv", REPORT_COLUMNS, [row])

    if show:
        console.print(create_loss_panel(trace))
        console.print(create_report_table([row], cfg.data.n_components))
        console.print(create_run_footer(run_dir, time.time() - started))
    return run_dir, report


def cmd_eval(checkpoint, source, n_samples=None, out=None, dump_samples=None, console=None, show=True):
    """
    Evaluate one generator checkpoint against the config's mixture.

    Returns:
        EvalReport (also written as a one-row CSV)
    """
    console = console or Console()
    cfg = config.load_config(source)
    report, points = evaluate_checkpoint(cfg, checkpoint, n_samples)
    header, _ = storage.load_checkpoint(checkpoint)
    checkpoint = Path(checkpoint)
    iteration = checkpoint.stem.split("-")[-1].lstrip("0") or "0"
    row = report.as_row(run_id=checkpoint.parent.parent.name, seed=header["seed"], iteration=iteration)

    out_path = Path(out) if out else checkpoint.with_name(f"eval-{checkpoint.stem}.csv")
    storage.write_csv(out_path, REPORT_COLUMNS, [row])
    if dump_samples:
        labels = assign_modes(points, cfg.data, cfg.eval.capture_radius_sigmas)
        columns = [f"x{i}" for i in range(points.shape[1])] + ["mode"]
        storage.write_csv(dump_samples, columns, [list(p) + [int(m)] for p, m in zip(points, labels)])
    if show:
        console.print(create_report_table([row], cfg.data.n_components))
    return report


def evaluate_run(run_dir, n_samples=None, out=None, console=None, show=True):
    """
    Evaluate every snapshot of a finished run, one report row per snapshot.

    Returns:
        list of row dicts
    """
    console = console or Console()
    run_dir = Path(run_dir)
    cfg = config.load_config(run_dir / "config.json")
    rows = []
    for iteration, path in storage.list_snapshots(run_dir):
        report, _ = evaluate_checkpoint(cfg, path, n_samples)
        rows.append(report.as_row(run_id=run_dir.name, seed=cfg.train.seed, iteration=iteration))
    if not rows:
        raise ValidationError(f"no snapshots found in {run_dir}")
    storage.write_csv(Path(out) if out else run_dir / "trajectory.csv", REPORT_COLUMNS, rows)
    if show:
        console.print(create_report_table(rows, cfg.data.n_components, title="Snapshot trajectory"))
    return rows


def cmd_analyze(source, out=None, console=None, show=True):
    """
    Write the weighting curve of the config's 1-D study as CSV.

    The last row is a footer carrying the missed/covered region ratio.

    Returns:
        tuple: (csv Path, WeightingCurve, ratio)
    """
    console = console or Console()
    cfg = config.load_config(source)
    settings = cfg.analysis
    px = MixtureSpec.from_dict(settings.px)
    pg = MixtureSpec.from_dict(settings.pg)
    if px.dim != 1 or pg.dim != 1:
        raise ValidationError("analysis.px and analysis.pg must be 1-D mixtures")

    grid = np.linspace(settings.grid_min, settings.grid_max, settings.grid_points)
    curve = weighting_curve(px, pg, grid)
    ratio = region_ratio(curve, px, pg, settings.radius_sigmas)

    if out:
        out_path = Path(out)
        if out_path.suffix != ".csv":
            out_path = out_path / f"{cfg.name}-weighting.csv"
    else:
        out_path = storage.output_root(cfg.out_dir) / f"{cfg.name}-weighting.csv"
    rows = list(curve.rows())
    rows.append(["region_ratio", ratio, None, None, None, None])
    storage.write_csv(out_path, CURVE_COLUMNS, rows)
    log.info("weighting curve written to %s", out_path)
    if show:
        console.print(create_curve_summary(ratio, int(curve.flagged.sum()), len(grid)))
    return out_path, curve, ratio


def _sweep_run(raw_cfg, root):
    """Train and evaluate one sweep member; never raises."""
    cfg = config.parse_config(raw_cfg)
    seed = cfg.train.seed
    try:
        run_dir, report = train_run(cfg, root, show=False)
        row = report.as_row(run_id=run_dir.name, seed=seed, iteration=cfg.train.iterations)
        row.update(status="ok", error="")
    except DanLabError as e:
        row = {"run_id": f"{cfg.name}-seed{seed}", "seed": seed, "status": "aborted", "error": str(e)}
    return row


def aggregate_rows(rows):
    """Per-seed rows (sorted by seed) plus one summary row over completed runs."""
    rows = sorted(rows, key=lambda r: int(r["seed"]))
    completed = [r for r in rows if r.get("status") == "ok"]
    summary = summarize(completed, SUMMARY_METRICS)
    summary_row = {"run_id": "summary", "seed": "", "iteration": "", "status": f"{len(completed)}/{len(rows)} ok", "error": ""}
    for metric, stats in summary.items():
        summary_row[metric] = "/".join(repr(v) for v in stats)
    return rows + [summary_row], summary


def cmd_sweep(source, parallelism=None, out=None, console=None, show=True):
    """
    Run every seed of a sweep, evaluate final checkpoints, write aggregate.csv.

    Runs execute in separate processes, at most parallelism at a time.

    Returns:
        tuple: (aggregate csv Path, rows including the summary row)
    """
    console = console or Console()
    spec = config.load_sweep(source)
    workers = spec.parallelism if parallelism is None else parallelism
    if workers < 1:
        raise ValidationError(f"parallelism must be at least 1, got {workers}")
    root = storage.ensure_dir(storage.output_root(out or spec.base.out_dir) / f"sweep-{spec.base.name}")
    members = [spec.run_config(seed).to_dict() for seed in spec.seeds]
    log.info("sweep of %d runs, parallelism %d", len(members), workers)

    rows = []
    if workers == 1:
        for raw in members:
            rows.append(_sweep_run(raw, str(root)))
            log.info("run seed=%s finished: %s", rows[-1]["seed"], rows[-1]["status"])
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_sweep_run, raw, str(root)) for raw in members]
            for future in as_completed(futures):
                rows.append(future.result())
                log.info("run seed=%s finished: %s", rows[-1]["seed"], rows[-1]["status"])

    all_rows, summary = aggregate_rows(rows)
    out_path = storage.write_csv(root / "aggregate.csv", AGGREGATE_COLUMNS, all_rows)
    if show:
        console.print(create_report_table(all_rows[:-1], spec.base.data.n_components, title="Sweep runs"))
        console.print(create_summary_table(summary))
    return out_path, all_rows
