"""Command-line interface for the fronthaul bit allocation simulator"""

import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from .baselines import equal_allocation
from .config_loader import apply_overrides, default_settings, parse_config
from .errors import FronthaulError, ResultIOError
from .experiment import (
    METAHEURISTIC_METHODS,
    draw_statistics,
    run_convergence,
    run_experiment,
    sweep_points,
)
from .exporter import ResultExporter, emit_results, paired_comparison, reference_method, summarize
from .models import ExperimentSpec, Objective, SweepKind, TrialRecord, ValidationReport
from .oracle import run_validation
from .quantization import MAX_BITS, default_profile, quantizer_table
from .streams import substream


EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_IO = 3

app = typer.Typer(
    name="fronthaul-sim",
    help="Allocate fronthaul quantization bits in cell-free massive MIMO by hierarchical harmony search",
    no_args_is_help=True,
)
console = Console()
err_console = Console(stderr=True)

# Usage errors share a base class with the exceptions typer re-exports
ClickException = sys.modules[typer.BadParameter.__module__].ClickException


@app.callback()
def configure(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log search progress at debug level"),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Only log warnings and errors"),
):
    """Set up logging for every command"""
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )


def _exit_code(error: Exception) -> int:
    if isinstance(error, (ResultIOError, OSError)):
        return EXIT_IO
    return EXIT_USAGE


def _fail(error: Exception) -> typer.Exit:
    console.print(f"\n[bold red]Error:[/bold red] {str(error)}")
    return typer.Exit(code=_exit_code(error))


def _load_spec(config_file: Optional[Path]) -> ExperimentSpec:
    if config_file is None:
        return default_settings()[1]
    return parse_config(config_file)[1]


def _split_methods(methods: Optional[str]) -> Optional[List[str]]:
    if methods is None:
        return None
    return [method.strip() for method in methods.split(",") if method.strip()]


ConfigOption = typer.Option(
    None,
    "--config",
    "-c",
    help="Path to configuration file (preset table3 when omitted)",
    exists=True,
    dir_okay=False,
)


@app.command()
def simulate(
    config_file: Optional[Path] = ConfigOption,
    out_dir: Path = typer.Option(..., "--out", "-o", help="Directory for result files"),
    seed: Optional[int] = typer.Option(None, "--seed", "-s", help="Root seed, overrides the config"),
    objective: Optional[Objective] = typer.Option(None, "--objective", help="total or maxmin"),
    fmt: str = typer.Option("csv", "--format", "-f", help="csv, json or both"),
    trials: Optional[int] = typer.Option(None, "--trials", "-t", help="UE drops per sweep point"),
    methods: Optional[str] = typer.Option(None, "--methods", "-m", help="Comma separated method list"),
    workers: Optional[int] = typer.Option(None, "--workers", "-w", help="Parallel trial workers"),
):
    """
    Run the configured experiment and write one record per (sweep point, trial, method)

    Example:
        python -m src.fronthaul simulate --config data/desk.cfg --out results/desk --seed 7
    """
    console.print("\n[bold cyan]Fronthaul Bit Allocation Simulator[/bold cyan]\n")

    if fmt not in ("csv", "json", "both"):
        raise typer.BadParameter(f"'{fmt}' is not one of csv, json, both", param_hint="--format")

    try:
        spec = apply_overrides(
            _load_spec(config_file),
            seed=seed,
            objective=objective,
            trials=trials,
            methods=_split_methods(methods),
            workers=workers,
        )
        _display_setup(spec)

        console.print("[bold]Running trials...[/bold]")
        records = run_experiment(spec)
        console.print(f"[green][OK][/green] {len(records)} records\n")

        _write_records(records, fmt, out_dir)
        summary = summarize(records)
        ResultExporter.export_summary_csv(summary, out_dir / "summary.csv")
        _display_summary(summary)
        console.print(f"\n[green][OK][/green] Results saved to {out_dir}")

    except (FronthaulError, OSError, ValueError) as e:
        raise _fail(e)


@app.command()
def convergence(
    config_file: Optional[Path] = ConfigOption,
    out_dir: Optional[Path] = typer.Option(None, "--out", "-o", help="Directory for the trace CSV"),
    seed: Optional[int] = typer.Option(None, "--seed", "-s", help="Root seed, overrides the config"),
    trials: int = typer.Option(1, "--trials", "-t", help="Instances to trace"),
    tolerance: float = typer.Option(0.01, "--tolerance", help="Relative gap counted as reaching the optimum"),
):
    """Stage-1 best evaluation per iteration next to the AP-level exhaustive optimum"""
    console.print("\n[bold cyan]Stage-1 Convergence[/bold cyan]\n")

    try:
        spec = apply_overrides(_load_spec(config_file), seed=seed)
        results = run_convergence(spec, trials)

        table = Table(show_header=True, header_style="bold magenta")
        table.add_column("Trial", justify="right")
        table.add_column("Stage-1 AP bits", style="cyan")
        table.add_column("Stage 1", justify="right")
        table.add_column("Optimum bits", style="yellow")
        table.add_column("Optimum", justify="right")
        table.add_column("Gap", justify="right")
        for result in results:
            table.add_row(
                str(result.trial),
                str(result.ap_bits),
                f"{result.trace[-1]:.4f}",
                str(result.optimum_bits),
                f"{result.optimum:.4f}",
                f"{100 * result.gap:.2f}%",
            )
        console.print(table)

        reached = sum(result.gap <= tolerance for result in results)
        console.print(f"\n  • Within {100 * tolerance:g}% of the optimum: {reached}/{len(results)}")
        if len(results) == 1:
            trace = ", ".join(f"{value:.3f}" for value in results[0].trace)
            console.print(f"  • Trace: {trace}")

        if out_dir is not None:
            ResultExporter.export_traces_csv(results, out_dir / "convergence.csv")
            console.print(f"\n[green][OK][/green] Traces saved to {out_dir / 'convergence.csv'}")

    except (FronthaulError, OSError, ValueError) as e:
        raise _fail(e)


@app.command()
def compare(
    config_file: Optional[Path] = ConfigOption,
    methods: str = typer.Option(
        ",".join(METAHEURISTIC_METHODS), "--methods", "-m", help="Comma separated method list"
    ),
    out_dir: Optional[Path] = typer.Option(None, "--out", "-o", help="Directory for result files"),
    seed: Optional[int] = typer.Option(None, "--seed", "-s", help="Root seed, overrides the config"),
    objective: Optional[Objective] = typer.Option(None, "--objective", help="total or maxmin"),
    trials: Optional[int] = typer.Option(None, "--trials", "-t", help="Paired trials"),
    workers: Optional[int] = typer.Option(None, "--workers", "-w", help="Parallel trial workers"),
):
    """Matched-budget comparison of allocation methods on paired drops"""
    console.print("\n[bold cyan]Metaheuristic Comparison[/bold cyan]\n")

    try:
        spec = apply_overrides(
            _load_spec(config_file),
            sweep=SweepKind.METAHEURISTICS,
            sweep_values=[],
            methods=_split_methods(methods),
            seed=seed,
            objective=objective,
            trials=trials,
            workers=workers,
        )
        _display_setup(spec)
        records = run_experiment(spec)
        console.print(f"[green][OK][/green] {len(records)} records\n")

        _display_summary(summarize(records))
        reference = reference_method(spec.methods)
        if reference is not None:
            metric = "total_se" if spec.objective == Objective.TOTAL else "min_se"
            _display_paired(paired_comparison(records, reference, metric), reference, metric)

        if out_dir is not None:
            _write_records(records, "csv", out_dir)
            console.print(f"\n[green][OK][/green] Results saved to {out_dir}")

    except (FronthaulError, OSError, ValueError) as e:
        raise _fail(e)


@app.command()
def validate(
    config_file: Optional[Path] = ConfigOption,
    samples: int = typer.Option(100_000, "--samples", "-n", help="Monte-Carlo realizations per instance"),
    instances: int = typer.Option(50, "--instances", "-i", help="Random small instances"),
    seed: Optional[int] = typer.Option(None, "--seed", "-s", help="Oracle seed"),
):
    """Check the closed-form SINR against Monte-Carlo and eigenvector oracles"""
    console.print("\n[bold cyan]Closed-Form Validation[/bold cyan]\n")

    try:
        profile = default_profile()
        extra = []
        root_seed = seed if seed is not None else 0
        if config_file is not None:
            spec = _load_spec(config_file)
            root_seed = seed if seed is not None else spec.seed
            system, stats = draw_statistics(spec, sweep_points(spec)[0], 0)
            extra.append((stats, system, equal_allocation(system).bits))
        report = run_validation(instances, samples, substream(root_seed, "oracle", 0), profile, extra)
        _display_validation(report)

    except (FronthaulError, OSError, ValueError) as e:
        raise _fail(e)

    if not report.passed:
        console.print("\n[bold red]Validation failed[/bold red]")
        raise typer.Exit(code=EXIT_VALIDATION)
    console.print("\n[green][OK][/green] Closed form agrees with every oracle")


@app.command("table")
def show_table(
    quantizer: bool = typer.Option(False, "--quantizer", help="Print the quantization distortion table"),
    max_bits: int = typer.Option(MAX_BITS, "--max-bits", help="Largest bit count to list"),
):
    """Print reference tables"""
    if not quantizer:
        console.print("Nothing to print, pass --quantizer")
        raise typer.Exit(code=EXIT_USAGE)

    try:
        profile = default_profile(max_bits)
    except FronthaulError as e:
        raise _fail(e)

    rho_table = Table(show_header=True, header_style="bold magenta")
    rho_table.add_column("Bits", justify="right")
    rho_table.add_column("rho", justify="right")
    rho_table.add_column("1 - rho", justify="right")
    rho_table.add_column("rho (1 - rho)", justify="right")
    rho_table.add_column("Provenance", style="cyan")
    for row in quantizer_table(profile):
        rho_table.add_row(
            str(row["bits"]),
            f"{row['rho']:.4g}",
            f"{row['gain']:.6f}",
            f"{row['noise_factor']:.4g}",
            row["provenance"],
        )
    console.print(rho_table)


def _display_setup(spec: ExperimentSpec):
    system = spec.scenario.system
    console.print(f"  • APs: {system.num_aps}, UEs: {system.num_ues}, antennas per AP: {system.antennas_per_ap}")
    console.print(f"  • Bit budget: {system.bit_budget}")
    console.print(f"  • Sweep: {spec.sweep.value} {spec.sweep_values or ''}")
    console.print(f"  • Methods: {', '.join(spec.methods)}")
    console.print(f"  • Trials: {spec.trials}, seed: {spec.seed}, objective: {spec.objective.value}\n")


def _write_records(records: Sequence[TrialRecord], fmt: str, out_dir: Path):
    formats = ["csv", "json"] if fmt == "both" else [fmt]
    for name in formats:
        emit_results(records, name, out_dir / f"records.{name}")


def _display_summary(summary: pd.DataFrame):
    """Mean and median SE per method and sweep value"""
    if summary.empty:
        console.print("[yellow]No completed records[/yellow]")
        return
    table = Table(show_header=True, header_style="bold magenta")
    table.add_column("Sweep", style="cyan")
    table.add_column("Method", style="yellow")
    table.add_column("Trials", justify="right")
    table.add_column("Total SE", justify="right")
    table.add_column("Median", justify="right")
    table.add_column("Min SE", justify="right")
    table.add_column("Evaluations", justify="right")
    for row in summary.itertuples(index=False):
        std = "" if np.isnan(row.total_se_std) else f" ± {row.total_se_std:.3f}"
        table.add_row(
            str(row.sweep_value),
            row.method,
            str(row.trials),
            f"{row.total_se_mean:.3f}{std}",
            f"{row.total_se_median:.3f}",
            f"{row.min_se_mean:.3f}",
            f"{row.eval_count_mean:.0f}",
        )
    console.print(table)


def _display_paired(paired: pd.DataFrame, reference: str, metric: str):
    console.print(f"\n[bold]Paired differences, {reference} minus method ({metric}):[/bold]\n")
    table = Table(show_header=True, header_style="bold magenta")
    table.add_column("Method", style="yellow")
    table.add_column("Pairs", justify="right")
    table.add_column("Mean diff", justify="right")
    table.add_column("W / L / T", justify="right")
    table.add_column("Sign test p", justify="right")
    for row in paired.itertuples(index=False):
        table.add_row(
            row.method,
            str(row.pairs),
            f"{row.mean_diff:+.4f}",
            f"{row.wins} / {row.losses} / {row.ties}",
            f"{row.p_value:.3g}",
        )
    console.print(table)


def _display_validation(report: ValidationReport):
    table = Table(show_header=True, header_style="bold magenta")
    table.add_column("#", justify="right")
    table.add_column("M x K x N", style="cyan")
    table.add_column("UE", justify="right")
    table.add_column("MC within 3σ", justify="right")
    table.add_column("Input power", justify="right")
    table.add_column("Residual", justify="right")
    table.add_column("Filter error", justify="right")
    for check in report.instances:
        clean = check.mc_passed == check.mc_checks and check.power_passed == check.power_checks
        style = None if clean else "yellow"
        table.add_row(
            str(check.index),
            f"{check.num_aps} x {check.num_ues} x {check.antennas_per_ap}",
            str(check.ue),
            f"{check.mc_passed}/{check.mc_checks}",
            f"{check.power_passed}/{check.power_checks}",
            f"{check.residual:.2e}",
            f"{check.filter_error:.2e}",
            style=style,
        )
    console.print(table)
    console.print(f"\n[bold]Summary:[/bold] {report.num_samples:,} samples per instance")
    console.print(f"  • Monte-Carlo pass rate: {100 * report.mc_pass_rate:.1f}% "
                  f"(required {100 * report.min_pass_rate:.0f}%)")
    console.print(f"  • Input power pass rate: {100 * report.power_pass_rate:.1f}%")
    console.print(f"  • Max residual: {report.max_residual:.2e} (tolerance {report.residual_tolerance:g})")
    console.print(f"  • Max filter error: {report.max_filter_error:.2e} (tolerance {report.filter_tolerance:g})")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and return its exit code

    Usage errors map to 1, validation failures to 2 and I/O errors to 3.
    """
    try:
        code = app(args=list(argv) if argv is not None else None, prog_name="fronthaul-sim",
                   standalone_mode=False)
    except ClickException as e:
        e.show()
        return EXIT_USAGE
    except typer.Abort:
        err_console.print("Aborted")
        return EXIT_USAGE
    return code if isinstance(code, int) else EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
