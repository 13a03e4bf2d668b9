"""Operator command line: validate maps, generate populations, build the
knowledge graph, run headless simulations, serve the API, talk to it."""

from __future__ import annotations

import json
import sys

import click

from .errors import PARSE_ERROR, SCHEMA_ERROR, SimError
from .kernel import Engine, EngineConfig
from .kg import build_kg
from .mapio import load_map_file, save_map_file
from .model import validate_map
from .popgen import PopGenConfig, generate_population

EXIT_DATA_ERROR = 1
EXIT_RUNTIME_ERROR = 2


def _load(map_path: str):
    try:
        return load_map_file(map_path)
    except SimError as exc:
        click.echo(f"{exc.code}: {exc.message}", err=True)
        if exc.code in (PARSE_ERROR, SCHEMA_ERROR):
            report = getattr(exc, "report", None)
            if report:
                for f in report.errors()[:50]:
                    click.echo(f"  error {f.code} [{f.subject_id}]: {f.message}", err=True)
            sys.exit(EXIT_DATA_ERROR)
        sys.exit(EXIT_RUNTIME_ERROR)


def _engine_options(fn):
    fn = click.option("--start-time", default=0, show_default=True, help="Simulation start, seconds since midnight.")(fn)
    fn = click.option("--tax-rate", default=0.10, show_default=True)(fn)
    fn = click.option("--wage-period", default=86400 * 30, show_default=True)(fn)
    fn = click.option("--interest-rate", default=0.01, show_default=True)(fn)
    fn = click.option("--interest-period", default=86400, show_default=True)(fn)
    return fn


def _config(seed, start_time, tax_rate, wage_period, interest_rate, interest_period, collect_stats=False):
    return EngineConfig(
        seed=seed,
        start_time=start_time,
        tax_rate=tax_rate,
        wage_period=wage_period,
        interest_rate=interest_rate,
        interest_period=interest_period,
        collect_stats=collect_stats,
    )


@click.group()
def main():
    """City microsimulation toolkit."""


@main.command()
@click.argument("map_path", type=click.Path(exists=True))
def validate(map_path):
    """Validate a map file; exit 0 when clean."""
    try:
        bundle = load_map_file(map_path)
    except SimError as exc:
        click.echo(f"{exc.code}: {exc.message}")
        report = getattr(exc, "report", None)
        if report:
            for f in report:
                click.echo(f"  {f.severity} {f.code} [{f.subject_id}]: {f.message}")
        sys.exit(EXIT_DATA_ERROR)
    report = validate_map(bundle)
    for f in report.warnings():
        click.echo(f"  warning {f.code} [{f.subject_id}]: {f.message}")
    click.echo(
        f"ok: {len(bundle.roads)} roads, {len(bundle.junctions)} junctions, "
        f"{len(bundle.aois)} aois, {len(bundle.pois)} pois, {len(bundle.persons)} persons"
    )


@main.command()
@click.argument("map_path", type=click.Path(exists=True))
@click.option("--n", default=100, show_default=True, help="Persons to generate.")
@click.option("--seed", default=0, show_default=True)
@click.option("--days", default=1, show_default=True, help="Days of schedule per person.")
@click.option("--out", required=True, type=click.Path(), help="Output map path.")
def genpop(map_path, n, seed, days, out):
    """Generate a synthetic population into a copy of the map."""
    bundle = _load(map_path)
    try:
        persons = generate_population(bundle, PopGenConfig(n_persons=n, seed=seed, days=days))
    except SimError as exc:
        click.echo(f"{exc.code}: {exc.message}", err=True)
        sys.exit(EXIT_RUNTIME_ERROR)
    bundle.persons.update(persons)
    save_map_file(bundle, out)
    click.echo(f"wrote {len(persons)} persons to {out}")


@main.command()
@click.argument("map_path", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None, help="Triple file (default stdout).")
def kg(map_path, out):
    """Build the knowledge graph and export one triple per line."""
    bundle = _load(map_path)
    graph = build_kg(bundle)
    lines = list(graph.export_lines())
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + ("\n" if lines else ""))
        click.echo(f"wrote {len(lines)} triples to {out}")
    else:
        for line in lines:
            click.echo(line)


@main.command()
@click.argument("map_path", type=click.Path(exists=True))
@click.option("--steps", default=86400, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--stats-out", type=click.Path(), default=None, help="NDJSON stats file.")
@_engine_options
def run(map_path, steps, seed, stats_out, start_time, tax_rate, wage_period, interest_rate, interest_period):
    """Run headless to --steps and print summary counters."""
    bundle = _load(map_path)
    try:
        engine = Engine(
            bundle,
            _config(
                seed, start_time, tax_rate, wage_period, interest_rate, interest_period,
                collect_stats=stats_out is not None,
            ),
        )
        summary = engine.run(steps)
    except SimError as exc:
        click.echo(f"{exc.code}: {exc.message}", err=True)
        sys.exit(EXIT_RUNTIME_ERROR)
    if stats_out:
        with open(stats_out, "w", encoding="utf-8") as fh:
            for record in engine.stats_records:
                fh.write(json.dumps(record, separators=(",", ":"), sort_keys=True))
                fh.write("\n")
    wall = summary.pop("wall_seconds")
    click.echo(json.dumps(summary, sort_keys=True))
    if wall > 0:
        click.echo(f"# {steps} steps in {wall:.2f}s ({steps / wall:.0f} steps/s)", err=True)


@main.command()
@click.argument("map_path", type=click.Path(exists=True))
@click.option("--port", default=8000, show_default=True, help="Port (UGI_PORT overrides).")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--free-run", default=None, type=float, help="Advance without clients, steps/second.")
@_engine_options
def serve(map_path, port, host, seed, free_run, start_time, tax_rate, wage_period, interest_rate, interest_period):
    """Serve the HTTP API (paused at step 0 until acks or --free-run)."""
    from .server import serve as run_server

    bundle = _load(map_path)
    try:
        engine = Engine(
            bundle, _config(seed, start_time, tax_rate, wage_period, interest_rate, interest_period)
        )
        graph = build_kg(bundle)
        run_server(engine, graph, port=port, host=host, free_run_rate=free_run)
    except SimError as exc:
        click.echo(f"{exc.code}: {exc.message}", err=True)
        sys.exit(EXIT_RUNTIME_ERROR)


@main.command()
@click.option("--url", default="http://127.0.0.1:8000", show_default=True)
def repl(url):
    """Line-oriented console: one command in, one response out."""
    import requests

    while True:
        try:
            line = input("> ") if sys.stdin.isatty() else input()
        except EOFError:
            break
        line = line.strip()
        if not line:
            continue
        if line in ("exit", "quit"):
            break
        try:
            response = requests.post(f"{url}/nl", json={"text": line}, timeout=30)
            click.echo(response.json().get("text", response.text))
        except requests.RequestException as exc:
            click.echo(f"Error: connection failed: {exc}", err=True)
            sys.exit(EXIT_RUNTIME_ERROR)


if __name__ == "__main__":
    main()
