"""Results presentation: console summary, CSV tables and the JSON run report."""

import math
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List

import pandas as pd
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from src import __version__
from src.base.state import ExperimentConfig, RunReport, ScenarioResult


def format_cell(value: Any) -> Any:
    """CSV rendering: floats as %.12g, infinities as `-inf`/`inf`, NaN and None empty."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return format(value, ".12g")
    return value


class ResultsPresenter:
    """Writes scenario tables and reports, and renders them on the console."""

    def __init__(self, console: Console = None):
        self.console = console or Console()

    def save_tables(self, result: ScenarioResult, output_dir: Path) -> Dict[str, str]:
        """One CSV per table; returns table name → file name."""
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        files = {}
        for name, rows in result.tables.items():
            if not rows:
                continue
            frame = pd.DataFrame(rows).map(format_cell)
            path = output_dir / f"{name}.csv"
            frame.to_csv(path, index=False, lineterminator="\r\n")
            files[name] = path.name
        return files

    def build_report(self, config: ExperimentConfig, result: ScenarioResult,
                     tables: Dict[str, str], wall_time: float) -> RunReport:
        return RunReport(
            version=__version__,
            timestamp=datetime.now().isoformat(),
            config=config.model_dump(mode="json"),
            resolved=result.resolved,
            summary=result.summary,
            checks=result.checks,
            tables=tables,
            wall_time=wall_time,
        )

    def save_json_report(self, report: RunReport, output_path: Path) -> Path:
        output_path = Path(output_path)
        output_path.write_text(report.model_dump_json(indent=2))
        return output_path

    def display_rich_summary(self, result: ScenarioResult):
        """Resolved parameters, summary values, checks and errors."""
        self.console.print(Panel(f"[bold]{result.scenario}[/bold]  ({result.execution_time:.2f}s)",
                                 border_style="blue"))
        self._display_mapping("Resolved parameters", result.resolved)
        self._display_mapping("Summary", result.summary)
        self._display_checks(result)
        self._display_errors(result.errors)

    def _display_mapping(self, title: str, values: Dict[str, Any]):
        if not values:
            return
        table = Table(title=title, show_header=True, header_style="bold magenta")
        table.add_column("Key", style="cyan")
        table.add_column("Value", style="green")
        for key, value in values.items():
            table.add_row(key, self._short(value))
        self.console.print(table)

    def _display_checks(self, result: ScenarioResult):
        if not result.checks:
            return
        table = Table(title="Checks", show_header=True, header_style="bold magenta")
        table.add_column("Check", style="cyan")
        table.add_column("Status")
        table.add_column("Detail", style="yellow")
        for outcome in result.checks:
            status = "[green]pass[/green]" if outcome.passed else "[red]fail[/red]"
            table.add_row(outcome.name, status, outcome.detail)
        self.console.print(table)

    def _display_errors(self, errors: List[str]):
        for error in errors[:5]:
            self.console.print(Panel(error, title="Cell error", border_style="red"))
        if len(errors) > 5:
            self.console.print(f"... and {len(errors) - 5} more", style="red")

    @staticmethod
    def _short(value: Any) -> str:
        if isinstance(value, float):
            return format(value, ".6g")
        if isinstance(value, (list, tuple)) and len(value) > 6:
            return f"[{', '.join(ResultsPresenter._short(v) for v in value[:6])}, ...]"
        if isinstance(value, (list, tuple)):
            return f"[{', '.join(ResultsPresenter._short(v) for v in value)}]"
        return str(value)
