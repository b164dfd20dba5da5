from __future__ import annotations

import asyncio
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import click

from .. import __version__
from ..config import PipelineConfig, load_config
from ..errors import ForgeError
from ..runtime import LogContext, LoggedError, log_error, run_loop, start_logging
from ..schema_core import canonical_json
from ._stages import StageOptions, run_pipeline, run_stage


@dataclass
class CliState:
    config_path: str | None = None
    overrides: dict[str, Any] = field(default_factory=dict)

    def load(self, overrides: dict[str, Any]) -> PipelineConfig:
        cfg = load_config(self.config_path)
        for key, value in {**self.overrides, **overrides}.items():
            if value is None:
                continue
            section, name = key.split(".")
            if section == "paths" and "://" not in str(value):
                value = str(Path(value).resolve())
            setattr(getattr(cfg, section), name, value)
        return cfg


def _fail(ctx: click.Context, stage: str, exc: BaseException) -> None:
    if not isinstance(exc, LoggedError):
        log_error(str(exc), raise_error=False)
    kind = getattr(exc, "kind", type(exc).__name__)
    click.echo(canonical_json({"error": kind, "message": str(exc), "stage": stage}), err=True)
    ctx.exit(1)


def _execute(
    ctx: click.Context,
    stage: str,
    overrides: dict[str, Any],
    options: StageOptions | None = None,
    *,
    report: bool = True,
) -> None:
    state: CliState = ctx.obj
    try:
        cfg = state.load(overrides)
        if stage == "run":
            counts: Any = run_loop(lambda: run_pipeline(cfg))
        else:
            counts = run_loop(lambda: run_stage(stage, cfg, options))
    except (ForgeError, LoggedError) as exc:
        _fail(ctx, stage, exc)
        return
    except asyncio.CancelledError:
        ctx.exit(130)
        return
    if report:
        click.echo(canonical_json({"stage": stage, "counts": counts}))


def _path() -> click.Path:
    return click.Path(dir_okay=False, path_type=str)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="mcp-forge")
@click.option(
    "--config", "config_path", type=click.Path(dir_okay=False), help="Config file (forge.cfg)."
)
@click.option("--seed", type=click.IntRange(min=0), help="Override [options] seed.")
@click.option("--jobs", type=click.IntRange(min=0), help="Override [options] jobs.")
@click.option("--quiet", is_flag=True, help="Only show warnings and errors.")
@click.option("--debug", is_flag=True, help="Show debug output.")
@click.pass_context
def cli(
    ctx: click.Context,
    config_path: str | None,
    seed: int | None,
    jobs: int | None,
    quiet: bool,
    debug: bool,
) -> None:
    """Build verified tool-use tasks from MCP servers and replay them offline."""
    LogContext.app_name = "mcp-forge"
    LogContext.quiet = quiet
    LogContext.level = "debug" if debug else "info"
    ctx.call_on_close(start_logging(err=True))
    ctx.obj = CliState(config_path, {"options.seed": seed, "options.jobs": jobs})


@cli.command()
@click.option("--source", help="Fixture directory or registry URL.")
@click.option("--query", "queries", multiple=True, help="Registry query, repeatable.")
@click.option("--out", type=_path())
@click.pass_context
def ingest(ctx: click.Context, source: str | None, queries: tuple[str, ...], out: str | None):
    """List, deduplicate and screen servers."""
    overrides = {
        "paths.source": source,
        "ingest.queries": ",".join(queries) if queries else None,
        "paths.servers": out,
    }
    _execute(ctx, "ingest", overrides)


@cli.command("spot-check")
@click.option("--servers", type=_path())
@click.option("-n", "count", type=click.IntRange(min=0), help="Number of servers to sample.")
@click.pass_context
def spot_check(ctx: click.Context, servers: str | None, count: int | None):
    """Sample screened servers for manual review."""
    _execute(ctx, "spot-check", {"paths.servers": servers}, StageOptions(spot_check=count))


@cli.group()
def graph() -> None:
    """Tool graph commands."""


@graph.command("build")
@click.option("--servers", type=_path())
@click.option("--out", type=_path())
@click.option("--prefilter/--no-prefilter", default=None)
@click.option("--checkpoint", type=_path())
@click.pass_context
def graph_build(
    ctx: click.Context,
    servers: str | None,
    out: str | None,
    prefilter: bool | None,
    checkpoint: str | None,
):
    """Judge all tool pairs and write the tool graph."""
    overrides = {
        "paths.servers": servers,
        "paths.graph": out,
        "graph.prefilter": prefilter,
        "graph.checkpoint": str(Path(checkpoint).resolve()) if checkpoint else None,
    }
    _execute(ctx, "graph", overrides)


@cli.command()
@click.option("--graph", "graph_path", type=_path())
@click.option("--backend", help="Cassette file, MCP URL or `live`.")
@click.option("--budget", type=click.IntRange(min=1))
@click.option("--per-start", type=click.IntRange(min=1))
@click.option("--out", type=_path())
@click.pass_context
def explore(
    ctx: click.Context,
    graph_path: str | None,
    backend: str | None,
    budget: int | None,
    per_start: int | None,
    out: str | None,
):
    """Explore call DAGs from every eligible start tool."""
    if backend is not None and backend != "live" and "://" not in backend:
        backend = str(Path(backend).resolve())
    overrides = {
        "paths.graph": graph_path,
        "explore.backend": backend,
        "explore.budget": budget,
        "explore.per_start": per_start,
        "paths.dags": out,
    }
    _execute(ctx, "explore", overrides)


@cli.command()
@click.option("--dags", type=_path())
@click.option("--variants", type=click.IntRange(min=1))
@click.option("--out", type=_path())
@click.pass_context
def synthesize(ctx: click.Context, dags: str | None, variants: int | None, out: str | None):
    """Synthesize candidate tasks from explored DAGs."""
    overrides = {"paths.dags": dags, "synthesize.variants": variants, "paths.tasks": out}
    _execute(ctx, "synthesize", overrides)


@cli.command()
@click.option("--tasks", type=_path())
@click.option("--dags", type=_path())
@click.option("--out", type=_path())
@click.pass_context
def validate(ctx: click.Context, tasks: str | None, dags: str | None, out: str | None):
    """Check, re-bind and judge candidate tasks."""
    overrides = {"paths.tasks": tasks, "paths.dags": dags, "paths.validated": out}
    _execute(ctx, "validate", overrides)


@cli.command()
@click.option("--tasks", type=_path())
@click.option("--test-size", type=click.IntRange(min=0))
@click.pass_context
def split(ctx: click.Context, tasks: str | None, test_size: int | None):
    """Split validated tasks into a fixed test set and a training set."""
    _execute(ctx, "split", {"paths.validated": tasks, "split.test_size": test_size})


@cli.command()
@click.option("--dags", type=_path())
@click.option("--tasks", type=_path())
@click.option("--out", type=_path())
@click.option("--top-k", type=click.IntRange(min=1))
@click.pass_context
def index(
    ctx: click.Context, dags: str | None, tasks: str | None, out: str | None, top_k: int | None
):
    """Index recorded calls into a cassette."""
    overrides = {
        "paths.dags": dags,
        "paths.validated": tasks,
        "paths.cassette": out,
        "simulate.top_k": top_k,
    }
    _execute(ctx, "index", overrides)


@cli.command()
@click.option("--cassette", type=_path())
@click.option("--host")
@click.option("--port", type=click.IntRange(min=1, max=65535))
@click.option("--stdio", is_flag=True, help="Serve one session on stdin/stdout.")
@click.option("--transcript", type=_path())
@click.pass_context
def simulate(
    ctx: click.Context,
    cassette: str | None,
    host: str | None,
    port: int | None,
    stdio: bool,
    transcript: str | None,
):
    """Serve the cassette as an MCP server."""
    overrides = {
        "paths.cassette": cassette,
        "simulate.host": host,
        "simulate.port": port,
        "simulate.transcript": str(Path(transcript).resolve()) if transcript else None,
    }
    _execute(ctx, "simulate", overrides, StageOptions(stdio=stdio), report=not stdio)


@cli.command()
@click.option("--tasks", type=_path())
@click.option("--cassette", type=_path())
@click.option("--agent", help="`scripted`, `scripted:<failure rate>` or an agent command.")
@click.option("--rollouts", type=click.IntRange(min=1))
@click.option("--ks", help="Comma separated k values.")
@click.option("--report", type=_path())
@click.pass_context
def evaluate(
    ctx: click.Context,
    tasks: str | None,
    cassette: str | None,
    agent: str | None,
    rollouts: int | None,
    ks: str | None,
    report: str | None,
):
    """Roll out an agent against the simulator and report pass@k."""
    overrides = {
        "paths.test": tasks,
        "paths.cassette": cassette,
        "evaluate.agent": agent,
        "evaluate.rollouts": rollouts,
        "evaluate.ks": ks,
        "paths.report": report,
    }
    _execute(ctx, "evaluate", overrides)


@cli.command()
@click.option("--tasks", type=_path())
@click.option("--agent")
@click.option("--steps", type=click.IntRange(min=1))
@click.option("--out", type=click.Path(file_okay=False, path_type=str))
@click.pass_context
def curriculum(
    ctx: click.Context, tasks: str | None, agent: str | None, steps: int | None, out: str | None
):
    """Run the filtered training curriculum over the training split."""
    overrides = {
        "paths.train": tasks,
        "evaluate.agent": agent,
        "evaluate.steps": steps,
        "paths.curriculum": out,
    }
    _execute(ctx, "curriculum", overrides)


@cli.command()
@click.option("--tasks", type=_path())
@click.option("--dags", type=_path())
@click.option("--out", type=_path())
@click.pass_context
def stats(ctx: click.Context, tasks: str | None, dags: str | None, out: str | None):
    """Report corpus statistics."""
    _execute(ctx, "stats", {"paths.validated": tasks, "paths.dags": dags, "paths.stats": out})


@cli.command()
@click.pass_context
def run(ctx: click.Context):
    """Run every batch stage from ingest to stats."""
    _execute(ctx, "run", {})


def main() -> None:
    cli(prog_name="mcp-forge")
