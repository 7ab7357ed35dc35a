"""Entry point for dan-lab."""

import argparse
import logging
import sys

from rich.console import Console
from rich.logging import RichHandler

from . import __version__, app
from .errors import CheckpointError, DanLabError, TrainingAbort, ValidationError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

DEFAULT_PROFILE = "gauss8-dan-s"


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dan-lab",
        description="Distributional adversarial network lab on synthetic mixtures",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Profiles:
  gauss8-gan           pointwise GAN baseline
  gauss8-dan-s         sample-classifier adversary (default)
  gauss8-dan-2s        two-sample adversary
  gauss8-dan-s-mixed   pointwise + sample-classifier objective
  fig1                 1-D gradient weighting study

Output root: --out, then $DAN_LAB_OUT, then ./runs
""",
    )
    parser.add_argument(
        "-V", "--version",
        action="version",
        version=f"dan-lab {__version__}",
    )
    parser.add_argument(
        "-v", "--verbose",
        action="store_true",
        help="Debug logging",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="Train one run")
    train.add_argument("--config", default=DEFAULT_PROFILE, help="Profile name or config file (default: %(default)s)")
    train.add_argument("--seed", type=int, help="Override train.seed")
    train.add_argument("--out", help="Output root directory")

    ev = sub.add_parser("eval", help="Evaluate a checkpoint or every snapshot of a run")
    target = ev.add_mutually_exclusive_group(required=True)
    target.add_argument("--checkpoint", help="Generator checkpoint file")
    target.add_argument("--run", help="Run directory; evaluates all its snapshots")
    ev.add_argument("--config", help="Profile name or config file (required with --checkpoint)")
    ev.add_argument("--n-samples", type=int, help="Generated points to evaluate")
    ev.add_argument("--out", help="Output CSV path")
    ev.add_argument("--dump-samples", help="Also write generated points and their modes to this CSV")

    analyze = sub.add_parser("analyze", help="Weighting curve of the 1-D gradient study")
    analyze.add_argument("--config", default="fig1", help="Profile name or config file (default: %(default)s)")
    analyze.add_argument("--out", help="Output CSV path or directory")

    sweep = sub.add_parser("sweep", help="Train and evaluate one run per seed")
    sweep.add_argument("--config", required=True, help="Sweep spec file")
    sweep.add_argument("--parallelism", type=int, help="Concurrent runs (default: from the sweep spec)")
    sweep.add_argument("--out", help="Output root directory")
    return parser


def setup_logging(verbose, console):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, show_path=verbose)],
        force=True,
    )


def run(args, console):
    if args.command == "train":
        app.cmd_train(args.config, seed=args.seed, out=args.out, console=console)
    elif args.command == "eval":
        if args.run:
            if args.dump_samples:
                raise ValidationError("--dump-samples needs --checkpoint")
            app.evaluate_run(args.run, n_samples=args.n_samples, out=args.out, console=console)
        else:
            if not args.config:
                raise ValidationError("--config is required with --checkpoint")
            app.cmd_eval(
                args.checkpoint,
                args.config,
                n_samples=args.n_samples,
                out=args.out,
                dump_samples=args.dump_samples,
                console=console,
            )
    elif args.command == "analyze":
        app.cmd_analyze(args.config, out=args.out, console=console)
    elif args.command == "sweep":
        app.cmd_sweep(args.config, parallelism=args.parallelism, out=args.out, console=console)


def main(argv=None):
    """Main entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    console = Console()
    setup_logging(args.verbose, console)

    # Banner
    console.print()
    console.print("[bold cyan]DAN Lab[/bold cyan]", justify="center")
    console.print(f"[dim]v{__version__}[/dim]", justify="center")
    console.print()

    try:
        run(args, console)
    except (ValidationError, CheckpointError) as e:
        console.print(f"[red]Error: {e.__class__.__name__}[/red]")
        for problem in getattr(e, "problems", [str(e)]):
            console.print(f"[red]  - {problem}[/red]")
        return EXIT_VALIDATION
    except TrainingAbort as e:
        console.print(f"[red]Training aborted: {e}[/red]")
        return EXIT_RUNTIME
    except DanLabError as e:
        console.print(f"[red]Error: {e}[/red]")
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        console.print("\n[dim]Interrupted.[/dim]")
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
