"""Rich console UI for zdquant."""

from typing import Any, Dict

from rich.console import Console
from rich.progress import BarColumn, Progress, SpinnerColumn, TaskProgressColumn, TextColumn, TimeRemainingColumn
from rich.table import Table

# Global console instance
console = Console()


def format_float(value: float) -> str:
    """12 significant digits, the precision of every printed number."""
    return f"{value:.12g}"


def print_banner():
    console.print("[bold cyan]zdquant[/bold cyan] - zero-delay quantization of Markov sources", style="dim")


def print_experiment(num_states: int, num_symbols: int, channel: str, resolution: int, method: str):
    """Print experiment setup - single line format."""
    console.print(
        f"[cyan]⚙[/cyan] |X|={num_states} M={num_symbols} | channel {channel} | n={resolution} | {method}"
    )


def print_success(message: str):
    console.print(f"[bold green]✓[/bold green] {message}")


def print_error(message: str):
    console.print(f"[bold red]✗[/bold red] {message}")


def print_warning(message: str):
    console.print(f"[bold yellow]![/bold yellow] {message}")


def print_info(message: str):
    console.print(f"[bold blue]ℹ[/bold blue] {message}")


def print_summary(title: str, stats: Dict[str, Any]):
    """Print a two-column summary table; floats use 12 significant digits."""
    table = Table(title=title, show_header=False, title_justify="left")
    table.add_column("key", style="dim")
    table.add_column("value")
    for key, value in stats.items():
        text = format_float(value) if isinstance(value, float) else str(value)
        if isinstance(value, bool):
            text = "[green]pass[/green]" if value else "[red]fail[/red]"
        table.add_row(key, text)
    console.print(table)


def create_progress() -> Progress:
    """Create a rich progress bar."""
    return Progress(
        SpinnerColumn(),
        TextColumn("[bold blue]{task.description}[/bold blue]"),
        BarColumn(bar_width=40),
        TaskProgressColumn(),
        TextColumn("•"),
        TimeRemainingColumn(),
        console=console,
        transient=False
    )
