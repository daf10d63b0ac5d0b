#!/usr/bin/env python3
import json
import sys
from pathlib import Path

import click
from loguru import logger

from denseorbit.core.certificate import Certificate, verify_certificate
from denseorbit.errors import DenseOrbitError, SearchExhaustedError, SpecError
from denseorbit.models.presets import preset
from denseorbit.services.search_service import SearchService, classify, orbit_table
from denseorbit.utils.environment import load_runtime_config
from denseorbit.utils.problem_loader import load_problem
from denseorbit.utils.serialization import as_rational
from denseorbit.utils.trace_logger import TraceLogger, frame_to_csv

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BEST_EFFORT = 2
EXIT_REJECTED = 3


def _fail(message: str, diagnostics=()) -> None:
    click.echo(f"error: {message}", err=True)
    for line in diagnostics:
        click.echo(f"  {line}", err=True)


def _parse_list(text: str, convert=float):
    return [convert(x) for x in text.split(",") if x.strip()]


@click.group()
@click.option("--config", "config_path", default=None, help="Path to configuration file (or DENSEORBIT_CONFIG)")
@click.option(
    "--log-level",
    default=None,
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    help="Log level for stderr (default from config)",
)
@click.pass_context
def cli(ctx, config_path, log_level):
    """denseorbit - lattice isometries approximating positive planes"""
    try:
        config = load_runtime_config(config_path)
    except Exception as e:
        _fail(f"cannot load configuration: {str(e)}")
        ctx.exit(EXIT_ERROR)
    logger.remove()
    logger.add(sys.stderr, level=(log_level or config["runtime"]["log_level"]).upper())
    ctx.obj = {"config": config}


@cli.command()
@click.argument("spec_path", type=click.Path())
@click.option("--seed", type=int, default=None, help="Seed for random targets and tie-breaking")
@click.option("--epsilon", type=float, default=None, help="Target distance")
@click.option("--max-word", type=int, default=None, help="Cap on group word length")
@click.option("--power-cap", type=int, default=None, help="Cap on |n| in powers of fixing elements")
@click.option("--denom-bound", type=int, default=None, help="Denominator bound for rationalizing targets")
@click.option("--preset", "preset_name", default=None, help="Use a preset lattice instead of the spec's")
@click.option("--trace", "trace_path", type=click.Path(), default=None, help="Write the pipeline trace (CSV + JSON)")
@click.option("--output", "output_path", type=click.Path(), default=None, help="Also write the certificate here")
@click.pass_context
def search(ctx, spec_path, seed, epsilon, max_word, power_cap, denom_bound, preset_name, trace_path, output_path):
    """Search for a certificate; exit 0 ok, 2 best-effort, 1 on errors"""
    service = SearchService(ctx.obj["config"])
    try:
        spec = load_problem(spec_path).with_preset(preset_name)
        result = service.search(
            spec,
            denom_bound=denom_bound,
            epsilon=epsilon,
            rng_seed=seed,
            max_word_length=max_word,
            power_cap=power_cap,
        )
    except SpecError as e:
        _fail(str(e), e.diagnostics)
        ctx.exit(EXIT_ERROR)
    except SearchExhaustedError as e:
        best = getattr(e.best, "distance", None)
        _fail(str(e) if best is None else f"{str(e)}; best distance achieved {best:.6g}")
        ctx.exit(EXIT_BEST_EFFORT)
    except (DenseOrbitError, ValueError) as e:
        _fail(str(e))
        ctx.exit(EXIT_ERROR)

    text = result.certificate.to_json()
    click.echo(text, nl=False)
    if output_path:
        Path(output_path).write_text(text)
    if trace_path:
        TraceLogger(Path(trace_path).parent).write_trace(result.problem.trace, trace_path)
    ctx.exit(EXIT_OK if result.ok else EXIT_BEST_EFFORT)


@cli.command()
@click.argument("certificate_path", type=click.Path())
@click.pass_context
def verify(ctx, certificate_path):
    """Re-check a certificate; exit 0 accepted, 3 rejected, 1 unreadable"""
    try:
        certificate = Certificate.from_json(Path(certificate_path).read_text())
    except json.JSONDecodeError as e:
        _fail(f"malformed certificate at line {e.lineno}, column {e.colno}: {e.msg}")
        ctx.exit(EXIT_ERROR)
    except SpecError as e:
        _fail(str(e), e.diagnostics)
        ctx.exit(EXIT_ERROR)
    except (OSError, DenseOrbitError, ValueError, TypeError, KeyError) as e:
        _fail(f"cannot read certificate: {str(e)}")
        ctx.exit(EXIT_ERROR)

    report = verify_certificate(certificate)
    if report.accepted:
        click.echo("accepted")
        ctx.exit(EXIT_OK)
    for reason in report.reasons:
        click.echo(reason, err=True)
    ctx.exit(EXIT_REJECTED)


@cli.command("classify")
@click.option("--preset", "preset_name", default="minkowski-2-1", help="Preset (2,1) lattice")
@click.option("--matrix", "matrix_json", required=True, help='Isometry as JSON rows, e.g. "[[1,0,0],[0,1,0],[0,0,1]]"')
@click.pass_context
def classify_command(ctx, preset_name, matrix_json):
    """Print the class and boundary fixed points of an isometry"""
    try:
        lattice, _ = preset(preset_name)
        rows = json.loads(matrix_json)
        matrix = [[as_rational(x) for x in row] for row in rows]
        _, text = classify(lattice, matrix)
    except json.JSONDecodeError as e:
        _fail(f"malformed matrix at column {e.colno}: {e.msg}")
        ctx.exit(EXIT_ERROR)
    except (DenseOrbitError, ValueError, KeyError) as e:
        _fail(str(e))
        ctx.exit(EXIT_ERROR)
    click.echo(text)


@cli.command()
@click.option("--preset", "preset_name", default="minkowski-2-1", help="Preset (2,1) lattice")
@click.option("--normal", default="1,0,0", help="Normal of the seed geodesic, comma separated")
@click.option("--target-normal", default=None, help="Normal of the geodesic distances are measured to")
@click.option("--depth", type=int, default=4, help="Breadth-first depth")
@click.option("--output", "output_path", type=click.Path(), default=None, help="Also write the CSV here")
@click.pass_context
def orbit(ctx, preset_name, normal, target_normal, depth, output_path):
    """CSV of boundary angles of a geodesic's orbit"""
    try:
        lattice, generators = preset(preset_name)
        target = _parse_list(target_normal, as_rational) if target_normal else None
        df = orbit_table(lattice, generators, _parse_list(normal, as_rational), depth, target)
    except (DenseOrbitError, ValueError, KeyError) as e:
        _fail(str(e))
        ctx.exit(EXIT_ERROR)
    click.echo(frame_to_csv(df, output_path), nl=False)


@cli.command()
@click.argument("spec_path", type=click.Path())
@click.option("--seeds", type=int, default=30, help="Number of seeded random targets")
@click.option("--epsilons", default="0.1,0.03,0.01", help="Comma separated ε values")
@click.option("--word-lengths", default=None, help="Comma separated word length caps")
@click.option("--output", "output_path", type=click.Path(), default=None, help="Also write the CSV here")
@click.pass_context
def survey(ctx, spec_path, seeds, epsilons, word_lengths, output_path):
    """Success rate and mean distance per ε and word length over random targets"""
    service = SearchService(ctx.obj["config"])
    try:
        spec = load_problem(spec_path)
        lengths = _parse_list(word_lengths, int) if word_lengths else None
        df = service.survey(spec, seeds, _parse_list(epsilons), lengths)
    except SpecError as e:
        _fail(str(e), e.diagnostics)
        ctx.exit(EXIT_ERROR)
    except (DenseOrbitError, ValueError) as e:
        _fail(str(e))
        ctx.exit(EXIT_ERROR)
    click.echo(frame_to_csv(df, output_path), nl=False)


if __name__ == "__main__":
    cli()
