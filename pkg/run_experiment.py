"""Experiment runner for Blaschke cocycle scenarios."""

import json
import logging
import os
import sys
import time
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional

import typer
from dotenv import load_dotenv
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler

# Load environment variables from .env file
load_dotenv()

from scenarios import SCENARIO_CLASSES, get_scenario_class
from src.base.errors import NUMERICAL_ERRORS, ConfigError
from src.base.scenario import load_config
from src.base.state import ExperimentConfig
from src.display import ResultsPresenter

app = typer.Typer(help="Lyapunov spectra of Blaschke product cocycles.")
console = Console()

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, rich_tracebacks=True, show_path=verbose)],
        force=True,
    )


def report_validation_error(error: ValidationError) -> None:
    console.print("❌ Invalid configuration:", style="bold red")
    for item in error.errors():
        path = ".".join(str(part) for part in item["loc"]) or "<root>"
        console.print(f"   {path}: {item['msg']}", style="red")


def resolve_config(config_path: Path, overrides: Dict[str, Any]) -> ExperimentConfig:
    """Config file, then environment defaults, then CLI flags."""
    config = load_config(config_path)
    data = config.model_dump()
    env_threads = os.getenv("BLASCHKE_COCYCLE_THREADS")
    if env_threads and "threads" not in config.model_fields_set:
        data["threads"] = int(env_threads)
    data.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.model_validate(data)


def create_output_directory(config: ExperimentConfig, out: Optional[Path]) -> Path:
    """--out as given, else a timestamped directory under the base output path."""
    if out is not None:
        output_dir = Path(out)
    elif config.output_dir:
        output_dir = Path(config.output_dir)
    else:
        base = os.getenv("BLASCHKE_COCYCLE_OUT", "outputs")
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        output_dir = Path(base) / config.scenario / f"{timestamp}_seed{config.seed}"
    output_dir.mkdir(parents=True, exist_ok=True)
    return output_dir


def load_or_exit(config: Path, overrides: Dict[str, Any]) -> ExperimentConfig:
    try:
        return resolve_config(config, overrides)
    except ValidationError as e:
        report_validation_error(e)
        raise typer.Exit(EXIT_CONFIG)
    except (ConfigError, json.JSONDecodeError, ValueError) as e:
        console.print(f"❌ Error loading config: {e}", style="bold red")
        raise typer.Exit(EXIT_CONFIG)


@app.command()
def run(
    config: Path = typer.Option(..., "--config", help="Path to experiment config (JSON or TOML)"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory for CSV tables and report.json"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Override the 64-bit symbol seed"),
    threads: Optional[int] = typer.Option(None, "--threads", help="Worker threads for grid cells"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
):
    """Run one experiment scenario."""
    setup_logging(verbose)
    experiment = load_or_exit(config, {"seed": seed, "threads": threads})
    console.print(f"🚀 Running {experiment.scenario} scenario", style="bold blue")

    start = time.time()
    try:
        scenario = get_scenario_class(experiment.scenario)(experiment)
        result = scenario.run()
    except ConfigError as e:
        console.print(f"❌ {e}", style="bold red")
        raise typer.Exit(EXIT_CONFIG)
    except NUMERICAL_ERRORS as e:
        console.print(f"❌ {type(e).__name__}: {e}", style="bold red")
        raise typer.Exit(EXIT_NUMERICAL)
    except KeyboardInterrupt:
        console.print("\n⚠️ Interrupted by user", style="yellow")
        raise typer.Exit(1)
    wall_time = time.time() - start

    output_dir = create_output_directory(experiment, out)
    presenter = ResultsPresenter(console)
    tables = presenter.save_tables(result, output_dir)
    report = presenter.build_report(experiment, result, tables, wall_time)
    json_output = presenter.save_json_report(report, output_dir / "report.json")

    presenter.display_rich_summary(result)
    passed = sum(1 for c in result.checks if c.passed)
    console.print(f"\n📈 Checks passed: {passed}/{len(result.checks)}", style="bold green")
    console.print(f"   Tables: {', '.join(tables.values()) or 'none'}")
    console.print(f"   Report: {json_output}")
    console.print(f"   Wall time: {wall_time:.2f}s")


@app.command()
def validate(
    config: Path = typer.Option(..., "--config", help="Path to experiment config (JSON or TOML)"),
):
    """Validate an experiment config without running it."""
    experiment = load_or_exit(config, {})
    try:
        get_scenario_class(experiment.scenario)(experiment)
    except ConfigError as e:
        console.print(f"❌ {e}", style="bold red")
        raise typer.Exit(EXIT_CONFIG)
    console.print(f"✅ {config} is a valid {experiment.scenario} config", style="bold green")


@app.command()
def list_scenarios():
    """List available scenarios."""
    console.print("📋 Available scenarios:", style="bold blue")
    for name, cls in SCENARIO_CLASSES.items():
        summary = (cls.__doc__ or sys.modules[cls.__module__].__doc__ or "").strip().splitlines()
        console.print(f"  • {name}" + (f": {summary[0]}" if summary else ""))


if __name__ == "__main__":
    app()
