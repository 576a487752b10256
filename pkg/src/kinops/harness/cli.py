"""``kinetic-ops``: run experiments, freeze baselines, list experiment ids."""

import json
import logging
import sys
from pathlib import Path

import click

from .config import EXPERIMENTS, ConstraintError, ExperimentConfig, default_config
from .experiments import freeze_brackets, freeze_report, run_experiment
from .report import emit_report

EXIT_REGRESSION = 1
EXIT_UNKNOWN = 2
EXIT_CONSTRAINT = 3


def _load(experiment: str, config_path: str | None) -> ExperimentConfig:
    if experiment not in EXPERIMENTS:
        raise KeyError(experiment)
    if config_path is None:
        return default_config(experiment)
    data = json.loads(Path(config_path).read_text())
    if data.get("experiment", experiment) != experiment:
        raise click.UsageError(f"config is for {data['experiment']!r}, not {experiment!r}")
    try:
        return ExperimentConfig.from_dict(data, experiment)
    except ConstraintError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConstraintError("config", str(exc)) from exc


def _guarded(fn):
    try:
        return fn()
    except KeyError as exc:
        click.echo(f"unknown experiment id {exc.args[0]!r}; try `kinetic-ops list`", err=True)
        sys.exit(EXIT_UNKNOWN)
    except ConstraintError as exc:
        click.echo(f"constraint violated: {exc}", err=True)
        sys.exit(EXIT_CONSTRAINT)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose: bool):
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(name)s: %(message)s")


@main.command("list")
def list_cmd():
    """Print the experiment ids."""
    for e in EXPERIMENTS:
        click.echo(e)


@main.command()
@click.option("--experiment", "experiment", required=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out", type=click.Path(file_okay=False), default="reports", show_default=True)
def run(experiment: str, config_path: str | None, out: str):
    """Run one experiment and write <out>/<id>.csv plus a JSON sidecar."""

    def go():
        cfg = _load(experiment, config_path).validate()
        report = run_experiment(cfg)
        csv_path, _ = emit_report(report, cfg.output or out)
        status = {True: "pass", False: "FAIL", None: "no baseline"}[report.passed]
        click.echo(f"{experiment}: {len(report.rows)} rows -> {csv_path} ({status})")
        return report

    report = _guarded(go)
    if report.passed is False:
        sys.exit(EXIT_REGRESSION)


@main.group()
def baseline():
    """Manage frozen equivalence constants."""


@baseline.command("freeze")
@click.option("--experiment", "experiment", required=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--baselines", "path", type=click.Path(dir_okay=False), default=None,
              help="Baseline file (default: the packaged file or $KINOPS_BASELINES).")
def freeze(experiment: str, config_path: str | None, path: str | None):
    """Run an experiment and store its fitted brackets as the new baseline."""

    def go():
        cfg = _load(experiment, config_path).validate()
        report = run_experiment(cfg)
        return freeze_report(report, cfg.grid, path=path)

    frozen = _guarded(go)
    for tid, entry in frozen.items():
        click.echo(f"{tid}: inf={entry['ratio_inf']:.6g} sup={entry['ratio_sup']:.6g}")


@baseline.command("freeze-brackets")
@click.option("--baselines", "path", type=click.Path(dir_okay=False), default=None)
def freeze_brackets_cmd(path: str | None):
    """Store the sphere-equivalence and dyadic-profile brackets (no collision sums)."""
    for tid, entry in freeze_brackets(path=path).items():
        click.echo(f"{tid}: inf={entry['ratio_inf']:.6g} sup={entry['ratio_sup']:.6g}")


if __name__ == "__main__":
    main()
