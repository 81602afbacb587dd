"""Top-level CLI for codedpush.

Entry point: ``codedpush`` (installed via pyproject.toml console_scripts).

Subcommands:
  trial   CONFIG     run one (multi-seed) trial and write per-seed results
  sweep   CONFIG     sweep cache fraction, power, bandwidth or users
  solve   INSTANCE   standalone TD/FD allocation of an instance CSV
  verify  CONFIG     bit-exact decode check at one seed
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Sequence

import click

from .config import ConfigError as ConfigError
from .config import RunConfig as RunConfig
from .config import load_config as load_config
from .config import parse_config as parse_config
from .verify import verify_main as verify_main

logger = logging.getLogger("codedpush.cli")

_LEVELS = {0: logging.WARNING, 1: logging.INFO, 2: logging.DEBUG}


def _configure_logging(verbosity: int) -> None:
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("codedpush").setLevel(_LEVELS[min(verbosity, 2)])


def _load(ctx: click.Context, path: str, **overrides) -> RunConfig:
    try:
        cfg = load_config(path)
        applied = cfg.defaults_applied
        cfg = cfg.with_overrides(**overrides)
    except ConfigError as e:
        raise click.ClickException(str(e)) from None
    _configure_logging(max(ctx.obj.get("verbose", 0), cfg.verbosity))
    if applied:
        click.echo("Defaults applied: " + ", ".join(f"{k}={v}" for k, v in applied.items()))
    return cfg


def _grid(text: str | None) -> tuple[float, ...] | None:
    if text is None:
        return None
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise click.BadParameter("grid is empty")
    return values


@click.group()
@click.option("-v", "--verbose", count=True, help="-v for INFO, -vv for DEBUG logging.")
@click.pass_context
def cli(ctx: click.Context, verbose: int):
    """codedpush - coded caching delivery over a shared wireless channel."""
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose
    _configure_logging(verbose)


@cli.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--mode", type=click.Choice(["td", "fd"]), default=None, help="Override the mode.")
@click.option(
    "--scheme", type=click.Choice(["coded", "baseline"]), default=None, help="Override the scheme."
)
@click.option(
    "--sizes", type=click.Choice(["analytic", "bitlevel"]), default=None, help="Payload size source."
)
@click.option("-o", "--output", default=None, help="Per-seed CSV (default: config output or trial.csv).")
@click.pass_context
def trial(ctx, config, seed, mode, scheme, sizes, output):
    """Run one trial averaged over the configured seeds."""
    from ..harness import run_trial

    cfg = _load(ctx, config, seed=seed, mode=mode, scheme=scheme, sizes_source=sizes)
    path = Path(output or cfg.output or "trial.csv")
    try:
        result = run_trial(cfg.to_trial_spec())
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["seed", "total_time_s", "throughput_bps", "converged"])
            for i, t in enumerate(result.seed_times):
                writer.writerow(
                    [cfg.seed + i, repr(float(t)), repr(result.useful_bits / float(t)), result.converged[i]]
                )
    except (ValueError, OSError) as e:
        raise click.ClickException(str(e)) from None

    click.echo(f"{cfg.scheme}/{cfg.mode}/{cfg.sizes_source}: {cfg.trials} seed(s) from {cfg.seed}")
    click.echo(f"  mean total time:  {result.total_time:.6g} s")
    click.echo(f"  throughput:       {result.throughput:.6g} b/s")
    click.echo(
        f"  mean throughput:  {result.mean_throughput:.6g} +- {result.stderr_throughput:.3g} b/s"
    )
    click.echo(f"  traffic:          {result.traffic:.6g} bits")
    if not result.all_converged:
        click.echo("  WARNING: solver did not converge on every seed")
    click.echo(f"Results written to {path}")


@cli.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--parameter",
    type=click.Choice(["cache_fraction", "power", "bandwidth", "users"]),
    default=None,
    help="Swept quantity (default: config sweep_parameter).",
)
@click.option("--grid", default=None, help="Comma-separated grid values, e.g. 2,4,6,8.")
@click.option(
    "--sizes",
    type=click.Choice(["analytic", "bitlevel", "both"]),
    default="both",
    help="Payload size source(s).",
)
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--workers", type=int, default=None, help="Worker threads.")
@click.option("--progress/--no-progress", default=False, help="Show a progress bar.")
@click.option("-o", "--output", default=None, help="Sweep CSV (default: config output or sweep.csv).")
@click.pass_context
def sweep(ctx, config, parameter, grid, sizes, seed, workers, progress, output):
    """Sweep one parameter for both schemes and both modes."""
    from ..harness import gain_table, sweep as run_sweep, write_csv

    cfg = _load(ctx, config, seed=seed, workers=workers, grid=_grid(grid), sweep_parameter=parameter)
    if cfg.sweep_parameter is None or cfg.grid is None:
        raise click.UsageError("sweep needs --parameter and --grid (or sweep_parameter/grid in the config)")
    sources = ("analytic", "bitlevel") if sizes == "both" else (sizes,)

    try:
        rows = run_sweep(
            cfg.to_trial_spec(),
            cfg.sweep_parameter,
            list(cfg.grid),
            sizes_sources=sources,
            workers=cfg.workers,
            progress=progress,
        )
        path = write_csv(rows, output or cfg.output or "sweep.csv")
    except (ValueError, OSError) as e:
        raise click.ClickException(str(e)) from None

    failed = [r for r in rows if not r.ok]
    click.echo(f"Sweep {cfg.sweep_parameter}: {len(rows)} rows, {len(failed)} failed")
    gains = gain_table(rows)
    if gains:
        click.echo("\n  value        mode  sizes     throughput gain  traffic gain")
        for g in gains:
            click.echo(
                f"  {g.value:<12.6g} {g.mode:<5} {g.sizes_source:<9} "
                f"{g.throughput_gain:<16.4g} {g.traffic_gain:.4g}"
            )
    click.echo(f"\nResults written to {path}")


@cli.command()
@click.argument("instance", type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(["td", "fd"]), default="td", help="Allocation mode.")
@click.option("--tol", type=float, default=None, help="FD relative tolerance.")
@click.option("--subcarriers", type=int, default=None, help="H; quantize onto the grid when given.")
@click.option("--slot-duration", type=float, default=None, help="T_u in seconds for quantization.")
@click.option("--slots", type=int, default=None, help="Grid rows for quantization.")
@click.option("-o", "--output", default="solution.csv", help="Solution CSV path.")
@click.pass_context
def solve(ctx, instance, mode, tol, subcarriers, slot_duration, slots, output):
    """Allocate resources for an instance CSV (index,S_bits,n_m)."""
    from ..allocator import OptInstance, allocate, quantize, save_solution_csv
    from ..utils import get_default

    try:
        inst = OptInstance.load_csv(instance)
        alloc = allocate(inst, mode, tol=tol)
        save_solution_csv(alloc, output)
    except (ValueError, OSError) as e:
        raise click.ClickException(str(e)) from None

    click.echo(f"{mode.upper()} allocation of {len(inst)} transmission(s)")
    share = alloc.fractions if mode == "td" else alloc.bandwidths
    label = "tau" if mode == "td" else "B_i"
    for i in range(len(inst)):
        extra = f" P_i={alloc.powers[i]:.6g}" if mode == "fd" else ""
        click.echo(f"  {i}: {label}={share[i]:.6g}{extra} t_i={alloc.times[i]:.6g}")
    click.echo(f"Total time: {alloc.total_time:.6g} s")

    if subcarriers is not None:
        t_u = slot_duration or float(get_default("system", "slot_duration"))
        try:
            grid = quantize(alloc, subcarriers, t_u, inst.bandwidth / subcarriers, slots=slots)
        except ValueError as e:
            raise click.ClickException(str(e)) from None
        click.echo(
            f"Quantized onto {grid.slots}x{grid.subcarriers} grid: "
            f"counts={grid.counts.tolist()} time={grid.quantized_time:.6g} s"
        )
    click.echo(f"Solution written to {output}")


@cli.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--dump-dir", default=None, help="Write placement.txt and plan.txt here.")
@click.pass_context
def verify(ctx, config, seed, dump_dir):
    """Check that every user decodes its request bit-exactly."""
    cfg = _load(ctx, config, seed=seed)
    try:
        code = verify_main(cfg, dump_dir=dump_dir)
    except ValueError as e:
        raise click.ClickException(str(e)) from None
    raise SystemExit(code)


def main(argv: Sequence[str] | None = None) -> int:
    """Run the CLI and return its exit status instead of exiting."""
    try:
        cli.main(args=list(argv) if argv is not None else None, prog_name="codedpush",
                 standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.exceptions.Abort:
        return 1
    except SystemExit as e:
        return int(e.code or 0)
    return 0


__all__ = ["cli", "main", "verify_main", "ConfigError", "RunConfig", "load_config", "parse_config"]


if __name__ == "__main__":
    cli()
