"""Command-line interface for the relmesh solver."""

import logging
import os
import sys
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional

import click

from . import __version__
from .cases import CASES, get_case
from .config import build_config, parse_bool, parse_config_text, parse_float_list, parse_int_list
from .exceptions import ConfigError, ValidationError
from .models import RunConfig
from .runner import Simulation, convergence_table, emit_vcl_comparison
from .snapshots import CUTLINE_FIELDS, emit_cutline, read_snapshot, write_cutline
from .storage import Storage

DEFAULT_DB = ".relmesh/runs.sqlite"


def _fail(error: Exception, code: int) -> None:
    click.echo(f"Error: {str(error)}", err=True)
    sys.exit(code)


def _parse_option(name: str, value: Optional[str], parser) -> Any:
    if value is None:
        return None
    try:
        return parser(value)
    except ValueError as e:
        raise ConfigError(f"bad value for --{name}: {str(e)}", key=name) from e


def _load(
    case: Optional[str], config_path: Optional[str], overrides: Dict[str, Any]
) -> RunConfig:
    """Merge a config file (if any), the positional case and CLI overrides."""
    values: Dict[str, Any] = {}
    lines: Dict[str, int] = {}
    if config_path:
        values, lines = parse_config_text(Path(config_path).read_text())
    if case:
        overrides = dict(overrides, case=case)
    return build_config(values, lines, overrides)


# Common options
def scheme_options(f):
    """Options shared by commands that run the solver."""
    f = click.option("--config", "config_path", type=click.Path(exists=True), help="Key-value config file")(f)
    f = click.option("--n", "cells", default=None, help="Cells per direction, e.g. 40 or 64,32")(f)
    f = click.option("--flux", default=None, help="Interface flux: ec, es1 or es2")(f)
    f = click.option("--adapt", default=None, help="Move the mesh: on/off")(f)
    f = click.option("--cfl", default=None, type=float, help="Courant number")(f)
    f = click.option("--t-final", "t_final", default=None, type=float, help="End time")(f)
    return f


def _overrides(cells, flux, adapt, cfl, t_final, **extra) -> Dict[str, Any]:
    out = {
        "cells": _parse_option("n", cells, parse_int_list),
        "flux": flux.lower() if flux else None,
        "adapt_enabled": _parse_option("adapt", adapt, parse_bool),
        "cfl": cfl,
        "t_final": t_final,
    }
    out.update(extra)
    return out


@click.group()
@click.version_option(version=__version__, prog_name="relmesh")
@click.option("-v", "--verbose", count=True, help="Log INFO (-v) or DEBUG (-vv)")
def cli(verbose: int):
    """relmesh: relativistic hydrodynamics on adaptive moving meshes.

    Runs the benchmark cases with entropy conservative or entropy stable
    fluxes, writes snapshots and entropy series, and tabulates convergence.
    """
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s")


@cli.command()
@click.argument("case", required=False)
@scheme_options
@click.option("--vcl", default=None, help="Temporal metrics: vcl1 or vcl2")
@click.option("--rk", default=None, help="Runge-Kutta scheme: rk2 or rk3")
@click.option("--output-dir", default=None, help="Artifact directory (default: $RELMESH_OUTPUT_ROOT/<case>)")
@click.option("--every", default=None, type=int, help="Also write a snapshot every N steps")
@click.option("--vtk/--no-vtk", default=None, help="Also write VTK files")
@click.option(
    "--db-path",
    default=lambda: os.getenv("RELMESH_DB", DEFAULT_DB),
    help="Run ledger (env: RELMESH_DB)",
)
def run(
    case: Optional[str],
    config_path: Optional[str],
    cells: Optional[str],
    flux: Optional[str],
    adapt: Optional[str],
    cfl: Optional[float],
    t_final: Optional[float],
    vcl: Optional[str],
    rk: Optional[str],
    output_dir: Optional[str],
    every: Optional[int],
    vtk: Optional[bool],
    db_path: str,
):
    """Run a case and write snapshots, the entropy series and a summary.

    Example:
        relmesh run vortex --n 40 --flux es2 --adapt on
    """
    try:
        config = _load(
            case,
            config_path,
            _overrides(
                cells,
                flux,
                adapt,
                cfl,
                t_final,
                vcl=vcl.lower() if vcl else None,
                rk=rk.lower() if rk else None,
                output_dir=output_dir,
                output_every=every,
                output_vtk=vtk,
            ),
        )
        sim = Simulation(config, storage=Storage(db_path))
        result = sim.run()
        record = result.record
        click.echo(
            f"[{click.style(record.run_id[:8], fg='green', bold=True)}] {record.case_name}: "
            f"{record.steps} steps to t={record.final_time:.6g} in {record.wall_time:.2f}s "
            f"(final dt={record.final_dt:.3e})"
        )
        click.echo(f"Output: {sim.output_dir}")
    except ValidationError as e:
        _fail(e, 1)
    except Exception as e:
        _fail(e, 2)


@cli.command()
@click.argument("case", required=False)
@scheme_options
@click.option("--grids", default="20,40,80", help="Comma list of N")
@click.option("--zero-time", is_flag=True, help="Measure the initial projection error only")
@click.option("--csv", "csv_path", default=None, type=click.Path(), help="Also write the table as CSV")
def converge(
    case: Optional[str],
    config_path: Optional[str],
    cells: Optional[str],
    flux: Optional[str],
    adapt: Optional[str],
    cfl: Optional[float],
    t_final: Optional[float],
    grids: str,
    zero_time: bool,
    csv_path: Optional[str],
):
    """Tabulate density errors and orders over a grid sequence.

    Example:
        relmesh converge vortex --grids 20,40,80,160
    """
    try:
        config = _load(case, config_path, _overrides(cells, flux, adapt, cfl, t_final))
        sizes = _parse_option("grids", grids, parse_int_list)
        table = convergence_table(config, sizes, zero_time=zero_time)
        click.echo(f"\nConvergence for '{table.case}':\n")
        click.echo(table.to_text())
        if csv_path:
            Path(csv_path).write_text(table.to_csv())
            click.echo(f"Wrote {csv_path}")
    except ValidationError as e:
        _fail(e, 1)
    except Exception as e:
        _fail(e, 2)


@cli.command()
@click.argument("snapshot", type=click.Path(exists=True))
@click.option("--from", "start", required=True, help="Start point, e.g. 0,0")
@click.option("--to", "end", required=True, help="End point, e.g. 1,1")
@click.option("--samples", default=200, type=int, help="Number of samples")
@click.option("--field", default="lnrho", type=click.Choice(CUTLINE_FIELDS), help="Sampled field")
@click.option("--out", default=None, type=click.Path(), help="Write CSV here instead of stdout")
def cutline(snapshot: str, start: str, end: str, samples: int, field: str, out: Optional[str]):
    """Sample a snapshot field along a straight line.

    Example:
        relmesh cutline runs/rp3/snapshot_000412.dat --from 0,0 --to 1,1
    """
    try:
        a = _parse_option("from", start, parse_float_list)
        b = _parse_option("to", end, parse_float_list)
        data = emit_cutline(read_snapshot(snapshot), a, b, samples=samples, field=field)
        if out:
            write_cutline(out, data, field)
            click.echo(f"Wrote {len(data)} samples to {out}")
        else:
            click.echo(f"s,{field}")
            for s, value in data:
                click.echo(f"{s!r},{value!r}")
    except ValidationError as e:
        _fail(e, 1)
    except Exception as e:
        _fail(e, 2)


@cli.command("vcl-compare")
@click.argument("case", required=False)
@scheme_options
@click.option("--output-dir", default=None, type=click.Path(), help="Write one CSV per combination here")
def vcl_compare(
    case: Optional[str],
    config_path: Optional[str],
    cells: Optional[str],
    flux: Optional[str],
    adapt: Optional[str],
    cfl: Optional[float],
    t_final: Optional[float],
    output_dir: Optional[str],
):
    """Compare Jacobian drift for VCL1/VCL2 with RK2/RK3.

    Example:
        relmesh vcl-compare spherical-riemann --n 50
    """
    try:
        config = _load(case, config_path, _overrides(cells, flux, adapt, cfl, t_final))
        series = emit_vcl_comparison(config, Path(output_dir) if output_dir else None)
        click.echo(f"\n{'variant':<12} {'steps':>6} {'max log10 drift':>16} {'final log10 drift':>18}")
        for (vcl, rk), rows in series.items():
            click.echo(
                f"{vcl + '/' + rk:<12} {len(rows) - 1:>6} {rows[:, 1].max():>16.2f} {rows[-1, 1]:>18.2f}"
            )
    except ValidationError as e:
        _fail(e, 1)
    except Exception as e:
        _fail(e, 2)


@cli.command("list-cases")
def list_cases():
    """List the registered cases.

    Example:
        relmesh list-cases
    """
    try:
        click.echo("\nCases:\n")
        for name in CASES:
            spec = get_case(name)
            cells = "x".join(map(str, spec.default_cells))
            tag = "exact" if not spec.qualitative else "qualitative"
            click.echo(f"  • {name:<18} {cells:>10}  t={spec.final_time:<6g} {tag:<11} {spec.description}")
        click.echo()
    except Exception as e:
        _fail(e, 2)


@cli.command()
@click.argument("case", required=False)
@click.option("--limit", "-n", default=20, type=int, help="Max runs to show")
@click.option(
    "--db-path",
    default=lambda: os.getenv("RELMESH_DB", DEFAULT_DB),
    help="Run ledger (env: RELMESH_DB)",
)
def history(case: Optional[str], limit: int, db_path: str):
    """Show recorded runs, newest first.

    Example:
        relmesh history rp1
    """
    try:
        records = Storage(db_path).get_history(case, limit=limit)
        if not records:
            click.echo("No runs recorded." if case is None else f"No runs recorded for '{case}'")
            return
        click.echo()
        for record in records:
            started = datetime.fromtimestamp(record.started_at / 1000).strftime("%Y-%m-%d %H:%M")
            run_id = click.style(record.run_id[:8], fg="yellow", bold=True)
            status = click.style(record.status, fg="green" if record.status == "completed" else "red")
            click.echo(f"{run_id} {record.case_name:<18} {status:<9} ({started})")
            click.echo(
                f"    steps={record.steps} t={record.final_time:.6g} dt={record.final_dt:.3e} "
                f"wall={record.wall_time:.2f}s config={record.config_hash[:8]}"
            )
        click.echo()
    except ValidationError as e:
        _fail(e, 1)
    except Exception as e:
        _fail(e, 2)


if __name__ == "__main__":
    cli()
