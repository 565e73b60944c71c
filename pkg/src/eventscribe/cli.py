"""Command-line interface.

    eventscribe run           process an events file through the pipeline
    eventscribe replay        replay events respecting recorded timing
    eventscribe serve         start the HTTP surface (consumer + admin)
    eventscribe batch-slotgen run the hourly slot-filler batch once
    eventscribe evaluate      score generated/reference pairs, render report

Reports land as JSON plus CSV, an aligned text table, and PNG figures next
to the JSON path.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .clock import SimulatedClock, WallClock
from .config import load_config
from .generation import GenerationError
from .metrics import KNOWN_METRICS, corpus_report
from .pipeline import build_runner, load_events_file, replay as run_replay
from .report import load_pairs_file, write_report, write_run_summary


@click.group()
def main():
    """Generative text pipeline for live sports and music events."""


def _runner_from_config(config_path: str, sim: bool = True, autoflush: bool = False):
    config = load_config(config_path)
    base_dir = Path(config_path).parent
    clock = SimulatedClock() if sim else WallClock()
    return config, build_runner(
        config, clock=clock, base_dir=base_dir, store_autoflush=autoflush
    )


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--events", "events_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="write the run summary JSON + figure here")
def run(config_path, events_path, out_path):
    """Process an events file to quiescence and print terminal counts."""
    _, runner = _runner_from_config(config_path)
    summary = run_replay(runner, load_events_file(events_path), speed=float("inf"))
    doc = summary.to_dict()
    click.echo(json.dumps(doc, indent=1))
    if out_path:
        paths = write_run_summary(doc, out_path)
        click.echo(f"summary written to {paths['json']} (+figure)")
    sys.exit(0 if summary.lost == 0 else 1)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--events", "events_path", required=True, type=click.Path(exists=True))
@click.option("--speed", default=1.0, show_default=True, help="time scale factor")
@click.option("--out", "out_path", type=click.Path(), default=None)
def replay(config_path, events_path, speed, out_path):
    """Replay events against simulated time at a speed factor."""
    _, runner = _runner_from_config(config_path)
    summary = run_replay(runner, load_events_file(events_path), speed=speed)
    doc = summary.to_dict()
    click.echo(json.dumps(doc, indent=1))
    if out_path:
        paths = write_run_summary(doc, out_path)
        click.echo(f"summary written to {paths['json']} (+figure)")
    sys.exit(0 if summary.lost == 0 else 1)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8340, show_default=True)
@click.option("--auth-token", default="", help="shared token for admin routes")
@click.option("--static-dir", default=None, type=click.Path(),
              help="serve the review console bundle from this directory")
@click.option("--slot-scheduler/--no-slot-scheduler", default=True, show_default=True,
              help="run the slot batch at the configured interval")
def serve(config_path, host, port, auth_token, static_dir, slot_scheduler):
    """Serve /personalize, /content, /review, /purge, and /story."""
    import threading
    import time

    import uvicorn

    from .api import create_app
    from .slots import batch_generate, default_slot_bank, export_artifacts

    config, runner = _runner_from_config(config_path, sim=False, autoflush=True)

    def pump_loop():  # drain the bus continuously beside the API
        while True:
            runner.run_until_quiescent()
            time.sleep(0.05)

    def slot_loop():  # the recurring batch that refreshes slot artifacts
        while True:
            try:
                batch = batch_generate(
                    runner.generator, default_slot_bank(),
                    variants_per_cell=config.slot_variants_per_cell,
                )
                export_artifacts(
                    batch.templates, runner.publisher.store, runner.publisher.cdn
                )
            except GenerationError as exc:
                click.echo(f"slot batch failed, previous artifacts stay live: {exc}", err=True)
            time.sleep(max(config.slot_interval_seconds, 1.0))

    threading.Thread(target=pump_loop, daemon=True).start()
    if slot_scheduler and config.slot_interval_seconds > 0:
        threading.Thread(target=slot_loop, daemon=True).start()
    app = create_app(runner, auth_token=auth_token, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command("batch-slotgen")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--variants", default=None, type=int,
              help="variants per (stat, band) cell; defaults to the config value")
def batch_slotgen(config_path, variants):
    """Run one slot-filler batch and export CDN artifacts."""
    from .slots import batch_generate, default_slot_bank, export_artifacts

    config, runner = _runner_from_config(config_path, autoflush=True)
    variants = variants or config.slot_variants_per_cell
    try:
        batch = batch_generate(runner.generator, default_slot_bank(), variants_per_cell=variants)
    except GenerationError as exc:
        click.echo(f"batch failed, previous artifacts stay live: {exc}", err=True)
        sys.exit(1)
    export = export_artifacts(batch.templates, runner.publisher.store, runner.publisher.cdn)
    click.echo(json.dumps({
        "templates": len(batch.templates),
        "degraded_cells": [list(c) for c in batch.degraded_cells],
        "attempts": batch.attempts,
        "written": export.written,
        "purged": export.purged,
        "reused_cells": [list(c) for c in export.reused_cells],
    }, indent=1))
    sys.exit(0 if batch.complete else 2)


@main.command()
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True),
              help="JSON/JSONL file of {generated, reference, [logprobs]} records")
@click.option("--metrics", default="std_word_edit,rouge1,rouge2,rougeL",
              show_default=True, help=f"comma list from: {','.join(KNOWN_METRICS)}")
@click.option("--unit", type=click.Choice(["char", "word"]), default="char",
              show_default=True, help="edit distance unit")
@click.option("--out", "out_path", default="report.json", show_default=True,
              type=click.Path())
def evaluate(pairs_path, metrics, unit, out_path):
    """Score a corpus of text pairs and render the report + figures."""
    pairs = load_pairs_file(pairs_path)
    if not pairs:
        click.echo("no pairs in input", err=True)
        sys.exit(1)
    selected = tuple(m.strip() for m in metrics.split(",") if m.strip())
    report = corpus_report(pairs, selected, unit=unit)
    paths = write_report(report, out_path)
    for metric, value in report.aggregates.items():
        click.echo(f"{metric}: {value:.4f}")
    click.echo("artifacts: " + ", ".join(str(p) for p in paths.values()))
