"""
Command-line entry point: ``ebth check`` runs verification suites and emits a
JSON report, ``ebth derive`` prints the symbolic Lax flow of one time.
"""

import logging
import sys
from pathlib import Path

import click
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from app.models import FAIL, PASS, SKIPPED, RunConfig, RunReport, load_run_config
from app.services.flows import u_flow_equations, w_flow_equations
from app.services.params import parse_flow
from app.services.runner import run_checks
from app.utils.config import settings
from app.utils.errors import ConfigError, EBTHError, FractionalFlow
from app.utils.logger import setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2

console = Console(stderr=True)

_STATUS_STYLE = {PASS: "green", FAIL: "bold red", SKIPPED: "yellow"}


def _config_error(exc: Exception) -> None:
    console.print(f"[bold red]configuration error:[/] {exc}")
    sys.exit(EXIT_CONFIG)


def _summary_table(report: RunReport) -> Table:
    table = Table(title=f"{settings.PROJECT_NAME} {settings.VERSION}")
    table.add_column("suite")
    table.add_column("identity")
    table.add_column("relation")
    table.add_column("status")
    table.add_column("detail", overflow="fold")
    for r in report.records:
        detail = r.reason or ""
        if r.status == FAIL and r.witness:
            detail = f"{detail} {r.witness}".strip()
        table.add_row(r.suite, r.identity, r.relation, f"[{_STATUS_STYLE[r.status]}]{r.status}[/]", detail)
    s = report.summary
    table.caption = f"{s[PASS]} passed, {s[FAIL]} failed, {s[SKIPPED]} skipped"
    return table


@click.group()
@click.option("--log-level", default=None, help="Overrides EBTH_LOG_LEVEL.")
def cli(log_level: str | None) -> None:
    """Exact verification toolkit for the extended bigraded Toda hierarchy."""
    if log_level:
        setup_logging(log_level.upper())


@cli.command()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="YAML run configuration.")
@click.option("--n", type=int)
@click.option("--m", type=int)
@click.option("--epsilon", help="Lattice spacing as 'p/q'.")
@click.option("--seed", type=int)
@click.option("--lattice", help="Sampled lattice window LO..HI.")
@click.option("--window", help="Symmetric operator window -K..K.")
@click.option("--t-order", type=int, help="Total time degree cap D.")
@click.option("--lambda-order", type=int, help="Largest lambda-order the spectral checks compare, at most D.")
@click.option("--suite", "suites", help="Comma separated suites.")
@click.option("--m-range", help="Shift range LO..HI for the scalar HBIs.")
@click.option("--r-max", type=int)
@click.option("--der-order", type=int, help="Sampled x-derivative order.")
@click.option("--n-max", type=int, help="Largest flow level n.")
@click.option("--bth/--no-bth", default=None, help="Drop the log times t[-M,n>=1].")
@click.option("--out", type=click.Path(dir_okay=False), help="Write the JSON report here instead of stdout.")
def check(config_path: str | None, **overrides) -> None:
    """Run the selected suites; exit 0 iff every check passed."""
    try:
        cfg = load_run_config(config_path, overrides)
    except (ValidationError, ConfigError) as exc:
        _config_error(exc)

    report = run_checks(cfg)
    console.print(_summary_table(report))

    payload = report.to_json()
    if cfg.out:
        try:
            Path(cfg.out).write_bytes(payload + b"\n")
        except OSError as exc:
            console.print(f"[bold red]cannot write report:[/] {exc}")
            sys.exit(EXIT_CONFIG)
        logger.info(f"Report written to {cfg.out}")
    else:
        click.echo(payload.decode())

    sys.exit(EXIT_OK if report.all_passed else EXIT_FAILED)


@cli.command()
@click.option("--flow", "flow_text", required=True, help="Flow index ALPHA,N.")
@click.option("--n", type=int, default=1)
@click.option("--m", type=int, default=1)
@click.option("--epsilon", default=settings.DEFAULT_EPSILON)
@click.option("--window", default=settings.DEFAULT_WINDOW, help="Operator window LO..HI.")
@click.option("--count", type=int, default=None, help="Number of w_i rows in the dressing form.")
def derive(flow_text: str, n: int, m: int, epsilon: str, window: str, count: int | None) -> None:
    """Print d u_j / d t[alpha,n] as polynomials in the u's."""
    try:
        cfg = RunConfig(n=n, m=m, epsilon=epsilon, window=window)
        p = cfg.params()
        flow = parse_flow(flow_text)
        p.check_flow(flow)
    except (ValidationError, ConfigError) as exc:
        _config_error(exc)

    try:
        for j, rhs in u_flow_equations(p, flow).items():
            click.echo(f"d u_{j} / d {flow} = {rhs}")
        return
    except FractionalFlow as exc:
        click.echo(f"# {exc}")
        click.echo("# dressing-variable form, from -(B)_- P_L:")
    except EBTHError as exc:
        console.print(f"[bold red]{type(exc).__name__}:[/] {exc}")
        sys.exit(EXIT_CONFIG)

    try:
        rows = w_flow_equations(p, flow, count or p.N + p.M)
    except EBTHError as exc:
        console.print(f"[bold red]{type(exc).__name__}:[/] {exc}")
        sys.exit(EXIT_CONFIG)
    for i, rhs in rows.items():
        click.echo(f"d w_{i} / d {flow} = {rhs}")


if __name__ == "__main__":
    cli()
