"""Command-line entry point: ``isrsgn gen | run | compare``.

Exit codes: 0 success, 1 usage or configuration error, 2 model or quadrature
failure, 3 I/O failure.  Validity-guard warnings are written to stderr, one
line each, prefixed with ``warning:``.
"""
from __future__ import annotations

import sys
from dataclasses import replace
from pathlib import Path

import click

from .quadrature import QuadratureError
from .registry import UnknownModelError
from .scenario import (SCENARIO_KINDS, ConfigError, GsnrTable, compare, format_config,
                       generate_scenario, load_config, run)

EXIT_OK, EXIT_CONFIG, EXIT_MODEL, EXIT_IO = 0, 1, 2, 3


class _ModelFailure(click.ClickException):
    exit_code = EXIT_MODEL


class _IoFailure(click.ClickException):
    exit_code = EXIT_IO


class _ConfigFailure(click.ClickException):
    exit_code = EXIT_CONFIG


def _metrics_line(a, b, m) -> str:
    return (f"{a} vs {b}: mae_db={m.mae_db:.6f} max_ae_db={m.max_ae_db:.6f} "
            f"worst_channel={m.worst_channel_index} worst_span={m.worst_span_index}")


@click.group()
@click.version_option(package_name="artifact")
def cli():
    """ISRS GN model link simulator."""


@cli.command()
@click.argument("kind", type=click.Choice(SCENARIO_KINDS))
@click.option("--seed", type=int, default=0, show_default=True, help="64-bit selection seed.")
@click.option("--models", default="closed_form", show_default=True,
              help="Comma-separated model names.")
@click.option("--out-dir", default="out", show_default=True, help="Output directory for run.")
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None,
              help="Write the config here instead of stdout.")
def gen(kind, seed, models, out_dir, output):
    """Emit the config of a reference scenario."""
    try:
        cfg = generate_scenario(kind, seed, models=tuple(m.strip() for m in models.split(",")),
                                output_dir=out_dir)
    except ConfigError as exc:
        raise _ConfigFailure(str(exc)) from None
    text = format_config(cfg)
    if output is None:
        click.echo(text, nl=False)
        return
    try:
        Path(output).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise _IoFailure(f"cannot write {output}: {exc}") from None


@cli.command("run")
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--models", default=None, help="Override the model list (comma-separated).")
@click.option("--out-dir", default=None, help="Override the output directory.")
@click.option("--seed", type=int, default=None, help="Override rng_seed.")
@click.option("--workers", type=int, default=None, help="Threads for the integral model.")
@click.option("--zeta-points", type=int, default=None)
@click.option("--f-grid-points", type=int, default=None)
@click.option("--rel-tol", type=float, default=None)
@click.option("--grid-strategy", type=click.Choice(["uniform", "hyperbolic"]), default=None)
def run_cmd(config, models, out_dir, seed, workers, zeta_points, f_grid_points, rel_tol,
            grid_strategy):
    """Run a scenario and write one CSV per model (plus a comparison CSV)."""
    try:
        cfg = load_config(config)
    except OSError as exc:
        raise _IoFailure(f"cannot read {config}: {exc}") from None
    except ConfigError as exc:
        raise _ConfigFailure(f"{config}: {exc}") from None
    try:
        changes = {}
        if models is not None:
            changes["models"] = tuple(m.strip() for m in models.split(",") if m.strip())
        if seed is not None:
            changes["rng_seed"] = seed
        if workers is not None:
            changes["workers"] = workers
        quad = {k: v for k, v in (("zeta_points", zeta_points), ("f_grid_points", f_grid_points),
                                  ("rel_tol", rel_tol), ("grid_strategy", grid_strategy))
                if v is not None}
        if quad:
            changes["quadrature"] = replace(cfg.quadrature, **quad)
        cfg = replace(cfg, **changes)
    except (ConfigError, ValueError) as exc:
        raise _ConfigFailure(str(exc)) from None
    try:
        result = run(cfg, output_dir=out_dir)
    except OSError as exc:
        raise _IoFailure(f"cannot write results: {exc}") from None
    except UnknownModelError as exc:
        raise _ConfigFailure(str(exc)) from None
    except (QuadratureError, ValueError, ArithmeticError) as exc:
        raise _ModelFailure(str(exc)) from None
    for msg in result.warnings:
        click.echo(f"warning: {msg}", err=True)
    levels = ", ".join(f"{k}={v:.2f} dBm" for k, v in result.launch_dbm.items())
    click.echo(f"launch power: {levels}")
    for path in result.files:
        click.echo(f"wrote {path}")
    for (a, b), m in result.metrics.items():
        click.echo(_metrics_line(a, b, m))


@cli.command("compare")
@click.argument("csv_a", type=click.Path(dir_okay=False))
@click.argument("csv_b", type=click.Path(dir_okay=False))
def compare_cmd(csv_a, csv_b):
    """MAE / MaxAE of the GSNR columns of two report CSVs."""
    tables = []
    for path in (csv_a, csv_b):
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise _IoFailure(f"cannot read {path}: {exc}") from None
        try:
            tables.append(GsnrTable.from_csv(text))
        except (ValueError, IndexError) as exc:
            raise _ConfigFailure(f"{path}: {exc}") from None
    try:
        m = compare(*tables)
    except ValueError as exc:
        raise _ConfigFailure(str(exc)) from None
    click.echo(_metrics_line(Path(csv_a).name, Path(csv_b).name, m))


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="isrsgn", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        # click reports usage errors with code 2; this CLI reserves 2 for model failures
        return EXIT_CONFIG if isinstance(exc, click.UsageError) else exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
