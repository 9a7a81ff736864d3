"""
Command-line entry point.

    bohmlab list        catalogue of solution families
    bohmlab generate    sample A, S, psi, V, V_B on a grid and write them out
    bohmlab verify      run the residual checks; exit 1 if any fails
    bohmlab propagate   split-step evolution compared with the closed form
    bohmlab sweep       derived and measured scalars over a parameter range

Exit codes: 0 pass, 1 verification failure, 2 usage or configuration error,
3 numeric-domain error, 130 interrupted.
"""

import functools
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import click
import numpy as np

from .config import OUTPUT_FORMATS, RunSettings, load_settings
from .errors import BohmlabError, ConfigError, VerificationFailure
from .expr import as_expr
from .export import report_rows, write_fields, write_json, write_reports, write_snapshots, write_table
from .families import FamilyConfig, build, family_ids, list_families, load_config, make_config
from .numerics import Grid
from .polar import SolutionBundle, bundle_from_f
from .propagate import (
    DEFAULT_INTERIOR,
    METRICS,
    PropagationSetup,
    closed_form,
    compare_evolution,
    propagate_bundle,
    snapshot_errors,
)
from .suite import VerificationResult, parse_values, run_suite, sweep, verify_bundle

logger = logging.getLogger(__name__)

RULE = "=" * 80

# default propagation domain: a whole number of 2 pi periods so integer-k plane waves stay periodic
PROPAGATION_DOMAIN = (-8 * np.pi, 8 * np.pi, 512)


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


def guarded(command):
    """Map bohmlab errors to exit codes and print them the way the runners do."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except VerificationFailure as e:
            click.echo(f"\n❌ Verification failed: {', '.join(e.failed)}", err=True)
            sys.exit(e.exit_code)
        except ConfigError as e:
            click.echo(f"\n❌ Configuration error: {e}", err=True)
            sys.exit(e.exit_code)
        except BohmlabError as e:
            click.echo(f"\n❌ {type(e).__name__}: {e}", err=True)
            sys.exit(e.exit_code)
        except KeyboardInterrupt:
            click.echo("\n\n⚠️  Interrupted by user", err=True)
            sys.exit(130)

    return wrapper


def _common(command):
    """Options shared by every command that computes something."""
    options = [
        click.option("--hbar", type=float, default=None, help="Reduced Planck constant (default BOHMLAB_HBAR or 1)"),
        click.option("--mass", type=float, default=None, help="Particle mass (default BOHMLAB_MASS or 1)"),
        click.option("--tol", type=float, default=None, help="FD residual tolerance (default BOHMLAB_TOL or 1e-6)"),
        click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help="Output directory"),
        click.option("--format", "fmt", type=click.Choice(OUTPUT_FORMATS), default=None, help="Output format"),
        click.option("--threads", type=int, default=None, help="Worker threads (default BOHMLAB_THREADS)"),
        click.option("--verbose", "-v", is_flag=True, help="Debug logging"),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def _selection(with_grid: bool = True):
    """Options choosing one bundle: a family (inline or from JSON) or a generating function."""
    options = [
        click.option("--family", "-f", "family", default=None, help="Family id or title (see `bohmlab list`)"),
        click.option("--param", "-p", "params", multiple=True, help="Family parameter as NAME=VALUE (repeatable)"),
        click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="Family config JSON"),
        click.option("--f-expr", default=None, help="Generating function f(x, t)"),
        click.option("--mu-expr", default=None, help="Gauge mu(t) for --f-expr (default 0)"),
    ]
    if with_grid:
        options.append(click.option("--grid", "grid_text", default=None, help="xmin,xmax,nx,tmin,tmax,nt"))

    def decorate(command):
        for option in reversed(options):
            command = option(command)
        return command

    return decorate


def _fields(text: str, option: str, names: Sequence[str], kinds: Sequence[type]) -> Tuple:
    """Comma-separated values for ``option``, one per name."""
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != len(names):
        raise ConfigError(f"{option} must be {','.join(names)}, got '{text}'")
    try:
        return tuple(kind(part) for kind, part in zip(kinds, parts))
    except ValueError as e:
        raise ConfigError(f"Invalid {option} '{text}': {e}") from None


def _settings(hbar, mass, tol, out_dir, fmt, threads, verbose) -> RunSettings:
    _configure_logging(verbose)
    return load_settings(
        {"hbar": hbar, "mass": mass, "tol": tol, "out_dir": out_dir, "fmt": fmt, "threads": threads}
    )


def _coerce(value: str) -> Any:
    for kind in (int, float):
        try:
            return kind(value)
        except ValueError:
            pass
    return value


def parse_params(pairs: Sequence[str]) -> Dict[str, Any]:
    """``["k=1", "kind=gaussian"]`` -> ``{"k": 1, "kind": "gaussian"}``."""
    params = {}
    for pair in pairs:
        name, sep, value = pair.partition("=")
        if not sep or not name.strip():
            raise ConfigError(f"Parameter must be NAME=VALUE, got '{pair}'")
        params[name.strip()] = _coerce(value.strip())
    return params


def _family_config(family, params, config_path) -> Optional[FamilyConfig]:
    if config_path:
        if family or params:
            raise ConfigError("--config cannot be combined with --family/--param")
        return load_config(config_path)
    if family:
        return make_config(family, parse_params(params))
    if params:
        raise ConfigError("--param needs --family")
    return None


def _resolve(
    settings: RunSettings,
    family,
    params,
    config_path,
    f_expr,
    mu_expr,
    grid_text,
) -> Tuple[str, SolutionBundle, Grid, Optional[FamilyConfig]]:
    """Exactly one of a family config or a generating function."""
    config = _family_config(family, params, config_path)
    if config is not None and f_expr:
        raise ConfigError("Give either a family or --f-expr, not both")
    if config is None and not f_expr:
        raise ConfigError("Give a family (--family or --config) or a generating function (--f-expr)")
    if mu_expr and not f_expr:
        raise ConfigError("--mu-expr only applies with --f-expr")

    if config is not None:
        bundle = build(config, settings.constants)
        grid = Grid.parse(grid_text) if grid_text else config.default_grid()
        return config.family, bundle, grid, config

    f = as_expr(f_expr)
    mu = as_expr(mu_expr) if mu_expr else as_expr(0)
    bundle = bundle_from_f(f, mu, settings.constants)
    grid = Grid.parse(grid_text) if grid_text else FamilyConfig().default_grid()
    return "custom", bundle, grid, None


@click.group()
@click.version_option(version="0.1.0", prog_name="bohmlab")
def cli():
    """
    Exact Schrödinger solutions from generating functions, and their checks.

    Examples:

        bohmlab list --section VI

        bohmlab generate --family airy_packet -p beta=2

        bohmlab generate --f-expr "exp(x)"

        bohmlab verify                      # every family at default parameters

        bohmlab verify --family oscillator_vvm --vvm

        bohmlab propagate --family scaling_packet --domain=-25.13,25.13,512 --span 0,0.5

        bohmlab propagate --family airy_packet --domain=-100.53,100.53,4096 --absorber 256 --metric density --span 0,1

        bohmlab sweep --family airy_packet --param beta --range 0.5:2:4
    """


@cli.command("list")
@click.option("--section", default=None, help="Only families whose section starts with this prefix")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable catalogue")
@guarded
def cmd_list(section, as_json):
    """List the built-in solution families."""
    descriptors = list_families(section)
    if as_json:
        click.echo(json.dumps([d.as_dict() for d in descriptors], indent=2))
        return
    click.echo(f"{'id':<20} {'title':<18} {'section':<8} {'V_B=0':<6} {'default window':<28} parameters")
    click.echo(RULE)
    for d in descriptors:
        params = ", ".join(f"{k}={v}" for k, v in d.params.items())
        flag = "yes" if d.vanishing_bohm else "no"
        click.echo(f"{d.id:<20} {d.title:<18} {d.section:<8} {flag:<6} {d.window_label():<28} {params}")
    click.echo(f"\n{len(descriptors)} families")


@cli.command("generate")
@_selection()
@_common
@guarded
def cmd_generate(family, params, config_path, f_expr, mu_expr, grid_text, hbar, mass, tol, out_dir, fmt, threads, verbose):
    """Sample A, S, psi, V and V_B on a grid and write them with metadata."""
    settings = _settings(hbar, mass, tol, out_dir, fmt, threads, verbose)
    label, bundle, grid, _ = _resolve(settings, family, params, config_path, f_expr, mu_expr, grid_text)

    click.echo(f"📋 Generating {label} on {grid.nx}x{grid.nt} grid")
    bundle.report_coverage(grid)
    fields = bundle.fields(grid)
    masked = bundle.masked(grid)
    if masked.excluded_fraction > 0.5:
        logger.warning("%.0f%% of the grid is excluded", 100 * masked.excluded_fraction)
    paths = write_fields(fields, masked, bundle.metadata(), settings.out_dir, label, settings.fmt)
    click.echo(f"\n✅ {label}: {len(fields)} fields, {100 * masked.excluded_fraction:.1f}% excluded")
    for path in paths:
        click.echo(f"   {path}")


def _print_result(result: VerificationResult) -> None:
    marker = "✅" if result.passed else "❌"
    click.echo(f"{marker} {result.family}")
    if result.error:
        click.echo(f"     error: {result.error}")
    for check in result.checks:
        status = "ok " if check.passed else "FAIL"
        linf = f"{check.linf:.3e}" if check.linf is not None else "   -     "
        order = f"order={check.order:.2f}" if check.order is not None else ""
        click.echo(f"     [{status}] {check.name:<17} linf={linf} {order} {check.detail}")


@cli.command("verify")
@_selection()
@click.option("--vvm", is_flag=True, help="Also compare A^2 with the Van Vleck-Morette determinant")
@click.option("--json", "as_json", is_flag=True, help="Print the report as JSON")
@_common
@guarded
def cmd_verify(
    family, params, config_path, f_expr, mu_expr, grid_text, vvm, as_json, hbar, mass, tol, out_dir, fmt, threads, verbose
):
    """Run the residual checks; without a selection, every family at defaults."""
    settings = _settings(hbar, mass, tol, out_dir, fmt, threads, verbose)
    tolerances = settings.tolerances

    if not (family or config_path or f_expr):
        if params:
            raise ConfigError("--param needs --family")
        configs = [make_config(family_id) for family_id in family_ids()]
        grid = Grid.parse(grid_text) if grid_text else None
        if not as_json:
            click.echo(f"🚀 Verifying {len(configs)} families ({settings.threads} threads)")
            click.echo(RULE)
        results = run_suite(configs, settings.constants, tolerances, settings.threads, grid, vvm)
        stem = "verify_all"
    else:
        label, bundle, grid, _ = _resolve(settings, family, params, config_path, f_expr, mu_expr, grid_text)
        results = [verify_bundle(bundle, grid, tolerances, vvm)]
        stem = f"verify_{label}"

    document = [r.as_dict() for r in results]
    path = write_json(document, Path(settings.out_dir) / f"{stem}.json")
    if as_json:
        click.echo(json.dumps(json.loads(path.read_text(encoding="utf-8")), indent=2))
    else:
        for result in results:
            _print_result(result)
        click.echo(RULE)
        passed = sum(r.passed for r in results)
        click.echo(f"\n{'✅' if passed == len(results) else '❌'} {passed}/{len(results)} passed")
        click.echo(f"   {path}")

    failed = [f"{r.family}.{name}" for r in results for name in r.failed]
    if failed:
        raise VerificationFailure(failed)


@cli.command("propagate")
@_selection(with_grid=False)
@click.option(
    "--domain",
    default=None,
    help=(
        "Periodic box xmin,xmax,nx (default -8pi,8pi,512). Packets with slowly decaying tails need a wider"
        " box and an absorber: airy_packet is compared on -32pi,32pi,4096 with --absorber 256 --metric density."
    ),
)
@click.option("--span", default=None, help="t0,t1 (default: the family's first time and half a unit later)")
@click.option("--dt", type=float, default=1e-3, show_default=True, help="Time step")
@click.option("--absorber", type=int, default=0, show_default=True, help="Cosine-taper width in cells")
@click.option("--metric", type=click.Choice(METRICS), default="abs", show_default=True)
@click.option("--interior", type=float, default=None, help="Fraction skipped at each edge (default 0.25 with absorber)")
@click.option("--snapshots", type=int, default=6, show_default=True, help="Stored frames including both ends")
@click.option("--max-error", type=float, default=1e-4, show_default=True, help="L2 threshold for exit 0")
@_common
@guarded
def cmd_propagate(
    family,
    params,
    config_path,
    f_expr,
    mu_expr,
    domain,
    span,
    dt,
    absorber,
    metric,
    interior,
    snapshots,
    max_error,
    hbar,
    mass,
    tol,
    out_dir,
    fmt,
    threads,
    verbose,
):
    """Evolve the closed form from its first time with split-step and compare."""
    settings = _settings(hbar, mass, tol, out_dir, fmt, threads, verbose)
    label, bundle, grid, _ = _resolve(settings, family, params, config_path, f_expr, mu_expr, None)
    x_min, x_max, nx = (
        _fields(domain, "--domain", ("xmin", "xmax", "nx"), (float, float, int)) if domain else PROPAGATION_DOMAIN
    )
    t0, t1 = _fields(span, "--span", ("t0", "t1"), (float, float)) if span else (grid.t_min, grid.t_min + 0.5)
    if snapshots < 2:
        raise ConfigError(f"--snapshots must be at least 2 (both ends), got {snapshots}")
    setup = PropagationSetup(x_min, x_max, nx, dt, absorber, settings.constants)
    interior = interior if interior is not None else (DEFAULT_INTERIOR if absorber else 0.0)

    click.echo(f"🚀 Propagating {label}: x in [{x_min:.4g}, {x_max:.4g}) nx={nx}, t {t0:.4g} -> {t1:.4g}, dt={dt:g}")
    numeric = propagate_bundle(bundle, setup, t0, t1, snapshots)
    report = compare_evolution(bundle, numeric, metric, interior)
    table = snapshot_errors(closed_form(bundle, numeric.x, numeric.times), numeric, metric, interior)

    out = Path(settings.out_dir)
    paths = [
        write_snapshots(numeric, out / f"propagate_{label}", settings.fmt),
        write_table(table, out / f"propagate_{label}_errors", settings.fmt),
        write_reports(report_rows([report], {report.name: report.l2 <= max_error}), out / f"propagate_{label}_report.json"),
    ]
    click.echo(RULE)
    for row in table.itertuples():
        click.echo(f"   t={row.t:<10.4g} linf={row.linf:.3e} l2={row.l2:.3e}")
    click.echo(RULE)
    norm_drift = float(np.max(np.abs(numeric.norms - numeric.norms[0])))
    click.echo(f"   norm drift {norm_drift:.3e}")
    marker = "✅" if report.l2 <= max_error else "❌"
    click.echo(f"\n{marker} {label}: worst l2={report.l2:.3e} (threshold {max_error:g})")
    for path in paths:
        click.echo(f"   {path}")
    if report.l2 > max_error:
        raise VerificationFailure([report.name])


@cli.command("sweep")
@click.option("--family", "-f", "family", required=True, help="Family id or title")
@click.option("--param", "param", required=True, help="Parameter to vary")
@click.option("--range", "value_range", required=True, help="start:stop:count or v1,v2,...")
@click.option("--set", "fixed", multiple=True, help="Other parameters as NAME=VALUE")
@_common
@guarded
def cmd_sweep(family, param, value_range, fixed, hbar, mass, tol, out_dir, fmt, threads, verbose):
    """Derived and measured scalars (accelerations, velocities, coefficients) per parameter value."""
    settings = _settings(hbar, mass, tol, out_dir, fmt, threads, verbose)
    values = parse_values(value_range)
    family_id = make_config(family, parse_params(fixed)).family
    click.echo(f"🚀 Sweeping {family_id}.{param} over {len(values)} values ({settings.threads} threads)")
    table = sweep(family_id, param, values, settings.constants, parse_params(fixed), settings.threads)
    path = write_table(table, Path(settings.out_dir) / f"sweep_{family_id}_{param}", settings.fmt)
    click.echo(RULE)
    click.echo(table.to_string(index=False))
    click.echo(RULE)
    failures = int(table["error"].notna().sum()) if "error" in table else 0
    click.echo(f"\n{'✅' if not failures else '⚠️ '} {len(values) - failures}/{len(values)} points")
    click.echo(f"   {path}")
    if failures:
        raise VerificationFailure([f"{param}={v}" for v, e in zip(values, table["error"]) if isinstance(e, str)])


def main(argv: Optional[List[str]] = None) -> None:
    cli.main(args=argv, prog_name="bohmlab")


if __name__ == "__main__":
    main()
