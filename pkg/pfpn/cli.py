from __future__ import annotations

import dataclasses
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence, Tuple

import click

from .config import (
    NUM_WORKERS, OUTPUT_DIR_ENV, RESOLVED_CONFIG_NAME, TRACE_LOG_NAME,
    RunConfig, config_reference, dump_run_config, load_run_config,
)
from .data.dataset import save_dataset
from .data.synthetic import generate_synthetic
from .errors import ConfigurationError
from .evaluation.plot import plot_reports
from .evaluation.report import evaluate_directories, format_headline, read_report, write_report
from .trace import JsonlLog, trace_call
from .training.ablation import format_table, held_out_samples, run_ablation
from .training.predict import predict as run_predict
from .training.trainer import train as run_train

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

_CONFIG_HELP = (
    "\b\n"
    "Config file: 'dotted.key = value' lines, or 'key = value' under a\n"
    "[section] header; values are JSON literals or bare strings. Any key can\n"
    "be overridden on the command line as --dotted.key=value.\n"
    f"${OUTPUT_DIR_ENV} overrides output_dir.\n"
    "\n"
    "\b\n"
    "Keys and defaults:\n"
    f"{config_reference()}\n"
)

# let '--model.num_fpms=2' style overrides through to ctx.args
_OVERRIDES = dict(ignore_unknown_options=True, allow_extra_args=True)

_config_option = click.option(
    "--config", "config_path",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Config file (default: built-in defaults).",
)


def _prepare_run(config_path: Optional[Path], overrides: Sequence[str]) -> Tuple[RunConfig, JsonlLog]:
    cfg = load_run_config(config_path, overrides)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    (cfg.output_dir / RESOLVED_CONFIG_NAME).write_text(dump_run_config(cfg), encoding="utf-8")
    return cfg, JsonlLog(cfg.output_dir / TRACE_LOG_NAME)


@click.group(epilog=f"Exit codes: {EXIT_OK} ok, {EXIT_USAGE} usage or config error, {EXIT_RUNTIME} runtime failure.")
def cli():
    """Progressive feature polishing saliency detector: train, ablate, predict, eval, plot."""


@cli.command(context_settings=_OVERRIDES, epilog=_CONFIG_HELP)
@_config_option
@click.pass_context
def train(ctx: click.Context, config_path: Optional[Path]):
    """Train one model; writes model.pt, train_log.jsonl and config.cfg to output_dir."""
    cfg, log = _prepare_run(config_path, ctx.args)
    result = trace_call(
        log,
        op="train",
        inputs={"config": str(config_path), "overrides": list(ctx.args)},
        call_fn=lambda: run_train(cfg.train_config(), cfg.output_dir),
        summarize=lambda r: {"checkpoint": str(r.checkpoint), "steps": r.steps, "last_loss": r.losses[-1]},
    )
    click.echo(f"checkpoint: {result.checkpoint}")
    click.echo(f"loss: {result.losses[0]:.4f} -> {result.losses[-1]:.4f} (smoothed {result.smoothed[-1]:.4f})")


@cli.command(context_settings=_OVERRIDES, epilog=_CONFIG_HELP)
@_config_option
@click.pass_context
def ablate(ctx: click.Context, config_path: Optional[Path]):
    """Train and score one model per ablation.t_values / ablation.shared_options setting."""
    cfg, log = _prepare_run(config_path, ctx.args)
    rows = trace_call(
        log,
        op="ablate",
        inputs={"config": str(config_path), "overrides": list(ctx.args)},
        call_fn=lambda: run_ablation(
            cfg.train_config(), cfg.ablation.t_values, cfg.ablation.shared_options, cfg.output_dir,
        ),
        summarize=lambda rs: [{"label": r.setting.label, "mae": r.report.mae} for r in rs],
    )
    click.echo(format_table(rows), nl=False)


@cli.command(context_settings=_OVERRIDES, epilog=_CONFIG_HELP)
@_config_option
@click.option("--split", type=click.Choice(["train", "test"]), default="test", show_default=True,
              help="Training generator or the held-out split used by ablate.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), required=True,
              help="Directory that receives images/ and masks/.")
@click.pass_context
def synth(ctx: click.Context, config_path: Optional[Path], split: str, out_dir: Path):
    """Write the synthetic dataset described by data.synthetic to disk."""
    cfg = load_run_config(config_path, ctx.args)
    log = JsonlLog(out_dir / TRACE_LOG_NAME)

    def work():
        samples = generate_synthetic(cfg.data.synthetic) if split == "train" else held_out_samples(cfg.data)
        save_dataset(samples, out_dir)
        return len(samples)

    n = trace_call(log, op="synth", inputs={"split": split, "out": str(out_dir)}, call_fn=work, summarize=lambda k: k)
    click.echo(f"wrote {n} samples to {out_dir}")


@cli.command(context_settings=_OVERRIDES, epilog=_CONFIG_HELP)
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True,
              help="Checkpoint written by train.")
@click.option("--input", "source", type=click.Path(exists=True, path_type=Path), required=True,
              help="One image or a directory of images.")
@click.option("--output", "out_dir", type=click.Path(file_okay=False, path_type=Path), required=True,
              help="Directory for <basename>.png predictions.")
@_config_option
@click.pass_context
def predict(ctx: click.Context, checkpoint: Path, source: Path, out_dir: Path, config_path: Optional[Path]):
    """Predict saliency maps at the original image resolution.

    With --config or overrides, the model section must match the checkpoint.
    """
    expected = load_run_config(config_path, ctx.args).model if (config_path or ctx.args) else None
    written = trace_call(
        JsonlLog(out_dir / TRACE_LOG_NAME),
        op="predict",
        inputs={"checkpoint": str(checkpoint), "input": str(source)},
        call_fn=lambda: run_predict(checkpoint, source, out_dir, expected),
        summarize=len,
    )
    click.echo(f"wrote {len(written)} predictions to {out_dir}")


@cli.command(name="eval")
@click.option("--pred-dir", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True,
              help="Predictions, <id>.png, 8-bit.")
@click.option("--mask-dir", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True,
              help="Ground-truth masks, <id>.png.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False, path_type=Path), required=True,
              help="Where to write the JSON metrics report.")
@click.option("--label", default=None, help="Curve label stored in the report (default: prediction dir name).")
@click.option("--workers", type=click.IntRange(min=1), default=NUM_WORKERS, show_default=True,
              help="Per-image worker threads.")
def evaluate(pred_dir: Path, mask_dir: Path, report_path: Path, label: Optional[str], workers: int):
    """Compute MAE, max/mean F-measure, S-measure and the 256-threshold PR table."""
    label = label or pred_dir.name

    def work():
        report = evaluate_directories(pred_dir, mask_dir, label=label, workers=workers)
        write_report(report, report_path)
        return report

    report = trace_call(
        JsonlLog(report_path.parent / TRACE_LOG_NAME),
        op="eval",
        inputs={"pred_dir": str(pred_dir), "mask_dir": str(mask_dir)},
        call_fn=work,
        summarize=lambda r: {"mae": r.mae, "max_f": r.max_f, "mean_f": r.mean_f, "s_measure": r.s_measure},
    )
    click.echo(format_headline(report))


@cli.command()
@click.argument("reports", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", "out_path", type=click.Path(dir_okay=False, path_type=Path), required=True,
              help="PNG file with PR and F-measure curves.")
def plot(reports: Tuple[Path, ...], out_path: Path):
    """Overlay the PR curves (and F-measure curves) of one or more eval reports."""

    def work():
        loaded = []
        for path in reports:
            r = read_report(path)
            loaded.append(r if r.label else dataclasses.replace(r, label=path.stem))
        return plot_reports(loaded, out_path)

    trace_call(
        JsonlLog(out_path.parent / TRACE_LOG_NAME),
        op="plot",
        inputs={"reports": [str(p) for p in reports]},
        call_fn=work,
        summarize=str,
    )
    click.echo(f"wrote {out_path}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        rv = cli.main(args=list(argv) if argv is not None else None, prog_name="pfpn", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except click.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except ConfigurationError as e:
        click.echo(f"config error: {e}", err=True)
        return EXIT_USAGE
    except Exception as e:
        logger.debug("command failed", exc_info=True)
        click.echo(f"error: {e}", err=True)
        return EXIT_RUNTIME
    return rv if isinstance(rv, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
