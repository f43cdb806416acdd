import logging
import sys
from pathlib import Path
from typing import Optional

import click
from rich import traceback
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from . import bench, config, context, database
from .convert import quad_to_std, std_to_quad
from .coords import (
    Space,
    format_solution_set,
    quad_matching_system,
    read_solution_set,
    standard_matching_system,
)
from .deadline import of as deadline_of
from .enumeration import DoubleDescription
from .errors import DimensionError, NotCompactError
from .progress import TaskManager
from .triangulation import build_skeleton, read_triangulation, require_compact, validate_compact

traceback.install(
    show_locals=True,
    suppress=[click],
)

LOG = logging.getLogger(__name__)


def _console() -> Console:
    return context.get_value("CONSOLE", factory=lambda: Console(stderr=True))


def _write(text: str, output: Optional[str]):
    if output:
        Path(output).write_text(text)
    else:
        click.echo(text, nl=False)


def _timeout(timeout_secs: Optional[float]) -> Optional[float]:
    if timeout_secs is None:
        return config.get_settings().timeout_secs
    return timeout_secs


def _debug_invariants() -> bool:
    return config.debug_invariants(context.get_value("DEBUG_INVARIANTS"))


@click.group()
@click.option("--verbose", "-v", count=True, help="More logging (-vv for debug)")
@click.option(
    "--debug-invariants/--no-debug-invariants",
    default=None,
    help=f"Check conversion loop invariants (default: ${config.DEBUG_ENV} or settings)",
)
def main(verbose: int, debug_invariants: Optional[bool]):
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(verbose, 2)]
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=_console(), show_path=False)],
        force=True,
    )
    context.set_value("DEBUG_INVARIANTS", debug_invariants)


@main.command("init")
@click.argument("dir", required=False)
def init(dir: str | None = None):
    """
    Initialize a workspace for settings and benchmark history
    """
    config.init(dir)
    _console().print(f"Initialized {Path(dir or '.').resolve() / config.Config.CONFIG_DIR}")


@main.command("settings")
@click.option("--reset", "-r", "reset", multiple=True, help="Restore a setting to its default")
@click.argument("changes", metavar="<name>=<value>...", nargs=-1)
def settings(changes: list[str], reset: list[str]):
    """
    Show or update workspace settings
    """
    cfg = config.get_instance()
    out = _console()
    if not changes and not reset:
        table = Table("Setting", "Value")
        for name, value in cfg.settings.model_dump().items():
            table.add_row(name, str(value))
        out.print(table)
        return

    updates = {}
    for change in changes:
        name, sep, value = change.partition("=")
        if not sep or name not in config.Settings.model_fields:
            raise click.BadParameter(f"expected <name>=<value>, got {change!r}")
        updates[name] = value
    cfg.reset(*reset)
    cfg.update(**updates)
    cfg.save()


@main.command("validate")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
def validate(path: str):
    """
    Check that a gluing file describes a compact triangulation
    """
    tri = read_triangulation(path)
    skeleton = build_skeleton(tri)
    report = validate_compact(tri, skeleton)

    out = _console()
    table = Table("Vertex", "Triangles", "Boundary", "Euler", "Link")
    for vertex in report.vertices:
        link = "disc" if vertex.boundary else "sphere"
        table.add_row(
            str(vertex.vertex),
            str(vertex.triangles),
            "yes" if vertex.boundary else "no",
            str(vertex.euler),
            link if vertex.ok else f"[red]not a {link}[/red]",
        )
    out.print(f"{path}: {tri.size} tetrahedra, {len(skeleton.edges)} edges, {skeleton.vertex_count} vertices")
    out.print(table)
    if not report.is_compact:
        raise NotCompactError("not a compact triangulation: " + "; ".join(report.failures))
    out.print("[green]compact[/green]")


@main.command("enumerate")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--coords", type=click.Choice([s.value for s in Space]), default="std", show_default=True)
@click.option("--algorithm", type=click.Choice(["direct", "via-quad"]), default="direct", show_default=True)
@click.option("--output", "-o", type=click.Path(dir_okay=False), help="Solution set file (default: stdout)")
@click.option("--timeout-secs", type=float, help="Per enumeration limit, 0 for none")
@click.option("--trace-out", type=click.Path(dir_okay=False), help="Conversion trace CSV (via-quad)")
def enumerate_cmd(
    path: str,
    coords: str,
    algorithm: str,
    output: Optional[str],
    timeout_secs: Optional[float],
    trace_out: Optional[str],
):
    """
    Enumerate the standard or quadrilateral solution set
    """
    space = Space(coords)
    if algorithm == "via-quad" and space is not Space.STANDARD:
        raise click.UsageError("--algorithm via-quad only applies to --coords std")
    tri = read_triangulation(path)
    skeleton = require_compact(tri)
    limit = deadline_of(_timeout(timeout_secs))

    if space is Space.QUAD:
        solutions = DoubleDescription(quad_matching_system(tri, skeleton), deadline=limit).run()
    elif algorithm == "direct":
        solutions = DoubleDescription(standard_matching_system(tri, skeleton), deadline=limit).run()
    else:
        quad_set = DoubleDescription(quad_matching_system(tri, skeleton), deadline=limit).run()
        solutions, trace = quad_to_std(
            quad_set,
            skeleton,
            standard_matching_system(tri, skeleton),
            deadline=limit,
            check_invariants=_debug_invariants(),
        )
        if trace_out:
            with open(trace_out, "wt", newline="") as f:
                trace.write_csv(f)
    _write(format_solution_set(solutions), output)
    _console().print(f"{len(solutions)} {space.value} rays", highlight=False)


@main.command("convert")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.argument("set_file", metavar="SET_FILE", type=click.Path(exists=True, dir_okay=False))
@click.option("--direction", type=click.Choice(["std2quad", "quad2std"]), required=True)
@click.option("--output", "-o", type=click.Path(dir_okay=False), help="Solution set file (default: stdout)")
@click.option("--trace-out", type=click.Path(dir_okay=False), help="Conversion trace CSV (quad2std)")
@click.option("--timeout-secs", type=float, help="Conversion limit, 0 for none")
def convert(
    path: str,
    set_file: str,
    direction: str,
    output: Optional[str],
    trace_out: Optional[str],
    timeout_secs: Optional[float],
):
    """
    Convert a solution set between standard and quadrilateral coordinates
    """
    tri = read_triangulation(path)
    skeleton = require_compact(tri)
    solutions = read_solution_set(set_file)
    source = Space.STANDARD if direction == "std2quad" else Space.QUAD
    if solutions.space is not source or solutions.size != tri.size:
        raise DimensionError(
            f"{set_file} holds {solutions.space.value} rays for {solutions.size} tetrahedra, "
            f"{direction} needs {source.value} rays for {tri.size}"
        )

    if source is Space.STANDARD:
        solutions.check(standard_matching_system(tri, skeleton))
        result = std_to_quad(solutions)
    else:
        solutions.check(quad_matching_system(tri, skeleton))
        result, trace = quad_to_std(
            solutions,
            skeleton,
            standard_matching_system(tri, skeleton),
            deadline=deadline_of(_timeout(timeout_secs)),
            check_invariants=_debug_invariants(),
        )
        if trace_out:
            with open(trace_out, "wt", newline="") as f:
                trace.write_csv(f)
    _write(format_solution_set(result), output)
    _console().print(f"{len(solutions)} rays in, {len(result)} rays out", highlight=False)


def _fmt(value: Optional[float], spec: str = ".3f") -> str:
    return "-" if value is None else format(value, spec)


@main.command("bench")
@click.argument("corpus", type=click.Path(exists=True, file_okay=False))
@click.option("--timeout-secs", type=float, help="Per enumeration limit, 0 for none")
@click.option("--jobs", "-j", type=int, help="Worker processes, one input each")
@click.option("--output", "-o", type=click.Path(dir_okay=False), help="CSV file (default: stdout)")
@click.option("--store/--no-store", default=None, help="Save the run in the workspace history")
def bench_cmd(
    corpus: str,
    timeout_secs: Optional[float],
    jobs: Optional[int],
    output: Optional[str],
    store: Optional[bool],
):
    """
    Time direct standard enumeration against the quadrilateral pipeline
    """
    out = _console()
    settings = config.get_settings()
    if timeout_secs is not None:
        settings = settings.model_copy(update={"timeout_secs": timeout_secs})
    jobs = jobs or settings.jobs
    files = bench.corpus_files(Path(corpus))

    with TaskManager(console=out).create_task("Benchmarking", len(files)) as root:

        def done(record: bench.BenchRecord):
            root.advance()
            root.describe(f"Benchmarking (last: {record.input_name})")
            LOG.info("%s: %s", record.input_name, record.status)

        records = bench.run_bench(
            files,
            settings,
            jobs=jobs,
            check_invariants=_debug_invariants(),
            on_done=done,
        )

    if output:
        with open(output, "wt", newline="") as f:
            bench.write_csv(records, f)
    else:
        bench.write_csv(records, sys.stdout)

    table = Table("Input", "n", "k", "k'", "Direct", "Pipeline", "Speedup", "Ratio", "Status")
    for r in records:
        table.add_row(
            r.input_name,
            str(r.n),
            _fmt(r.quad_size, "d"),
            _fmt(r.std_size, "d"),
            _fmt(r.direct_secs),
            _fmt(r.pipeline_secs),
            _fmt(r.speedup, ".1f"),
            _fmt(r.conversion_ratio, ".2f"),
            r.status,
        )
    out.print(table)

    summary = bench.summarize(records, settings)
    if summary.slope is not None:
        out.print(f"log-log slope of conversion time against k': {summary.slope:.2f}")
    if summary.largest is not None:
        out.print(f"largest input {summary.largest}: speedup {_fmt(summary.largest_speedup, '.1f')}")
    for message in summary.warnings:
        out.print(f"[yellow]WARN[/yellow] {message}")
    for message in summary.failures:
        out.print(f"[red]FAIL[/red] {message}")

    if store is None:
        store = config.find_config() is not None
    if store:
        run_id = database.get_database().store_run(bench.to_run(Path(corpus), settings, jobs, records))
        out.print(f"stored as run {run_id}")
    if summary.failures:
        raise click.ClickException(f"{len(summary.failures)} inputs exceed the list ratio limit")


@main.command("history")
@click.option("--run", "run_id", type=int, help="Show the rows of one run")
def history(run_id: Optional[int]):
    """
    List stored benchmark runs
    """
    db = database.get_database()
    out = _console()
    if run_id is None:
        table = Table("Run", "Started", "Corpus", "Inputs", "Timeout", "Jobs")
        for run in db.runs():
            table.add_row(
                str(run.id),
                run.started.isoformat(timespec="seconds"),
                run.corpus,
                str(len(run.results)),
                _fmt(run.timeout_secs, ".0f"),
                str(run.jobs),
            )
        out.print(table)
        return

    results = db.results(run_id)
    if not results:
        raise click.BadParameter(f"no run {run_id}", param_hint="--run")
    records = [
        bench.BenchRecord.model_validate(
            {name: getattr(r, name) for name in bench.COLUMNS}
        )
        for r in results
    ]
    bench.write_csv(records, sys.stdout)


if __name__ == "__main__":
    main()
