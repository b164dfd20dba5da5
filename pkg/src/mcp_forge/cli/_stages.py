"""The pipeline stages.

Each stage reads its inputs from the paths configured in a `PipelineConfig`, writes its outputs
and a run manifest next to the primary output, and returns the counts recorded in the manifest.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Awaitable, Callable

from ..artifacts import write_jsonl, write_manifest
from ..config import PipelineConfig
from ..errors import ForgeError
from ..evaluation import parse_agent, passk_report, run_curriculum, run_rollouts
from ..explorer import (
    BackendUnavailable,
    McpHttpBackend,
    NoStartCall,
    ToolBackend,
    explore,
    load_dags,
    save_dags,
    validate_dag,
)
from ..forge import (
    ExtractionFailed,
    Mismatch,
    NoUsableNodes,
    TaskRecord,
    bind_answer,
    load_tasks,
    save_tasks,
    structural_precheck,
    synthesize_tasks,
    validate_task,
)
from ..graph import Confidence, build_graph, eligible_start_tools, load_graph, save_graph
from ..judge import JudgeGateway, gateway_from_config
from ..registry import (
    dedup_servers,
    funnel,
    list_servers,
    load_servers,
    save_servers,
    screen_all,
    spot_check_sample,
)
from ..runtime import LogContext, log, log_warning, map_ordered
from ..schema_core import ToolRef, canonical_json
from ..simulator import McpServer, Simulator, build_index, load_cassette, save_cassette
from ..simulator import SimulatorBackend, serve_http, serve_stdio
from ._stats import corpus_stats

REWARDS_KIND = "rewards"
STAGES = (
    "ingest",
    "spot-check",
    "graph",
    "explore",
    "synthesize",
    "validate",
    "split",
    "index",
    "simulate",
    "evaluate",
    "curriculum",
    "stats",
)
PIPELINE = (
    "ingest",
    "graph",
    "explore",
    "synthesize",
    "validate",
    "split",
    "index",
    "evaluate",
    "curriculum",
    "stats",
)


class UnknownStage(ForgeError):
    pass


@dataclass
class StageOptions:
    """Per-invocation settings that are not part of the config file."""

    stdio: bool = False
    """Serve the simulator over stdio instead of HTTP."""
    spot_check: int | None = None


def _jobs(cfg: PipelineConfig) -> int | None:
    return cfg.options.jobs or None


def _source(cfg: PipelineConfig) -> str | Path:
    source = cfg.paths.source
    if source.startswith(("http://", "https://")):
        return source
    return cfg.path(source)


def _write_json(path: Path, value: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_json(value) + "\n", encoding="utf-8")


async def ingest(cfg: PipelineConfig, gateway: JudgeGateway, options: StageOptions) -> dict:
    scraped = await list_servers(_source(cfg), cfg.ingest.query_list)
    unique = dedup_servers(scraped)
    screened = await screen_all(unique, gateway, jobs=_jobs(cfg))
    output = cfg.path(cfg.paths.servers)
    counts = funnel(len(scraped), len(unique), screened)
    save_servers(output, screened, funnel=counts)
    log(f"{counts['passed']} of {counts['scraped']} listed servers passed screening")
    write_manifest(output, "ingest", seed=cfg.options.seed, counts=counts)
    return counts


async def spot_check(cfg: PipelineConfig, gateway: JudgeGateway, options: StageOptions) -> dict:
    servers = cfg.path(cfg.paths.servers)
    n = cfg.ingest.spot_check if options.spot_check is None else options.spot_check
    sample = spot_check_sample(load_servers(servers), n, cfg.options.seed)
    output = servers.with_name("spot_check.jsonl")
    count = save_servers(output, sample)
    write_manifest(
        output, "spot-check", seed=cfg.options.seed, counts={"sampled": count}, inputs=[servers]
    )
    return {"sampled": count}


async def graph(cfg: PipelineConfig, gateway: JudgeGateway, options: StageOptions) -> dict:
    servers = cfg.path(cfg.paths.servers)
    tools = [
        tool
        for record in load_servers(servers)
        if record.verdict is not None and record.verdict.passed
        for tool in record.tools
    ]
    checkpoint = cfg.graph.checkpoint
    tool_graph = await build_graph(
        tools,
        gateway,
        prefilter=cfg.graph.prefilter,
        checkpoint=cfg.path(checkpoint) if checkpoint else None,
        jobs=_jobs(cfg),
    )
    output = cfg.path(cfg.paths.graph)
    save_graph(output, tool_graph)
    counts = {**tool_graph.stats(), "eligible_start_tools": len(eligible_start_tools(tool_graph))}
    write_manifest(output, "graph", seed=cfg.options.seed, counts=counts, inputs=[servers])
    return counts


def explore_backend(
    cfg: PipelineConfig, gateway: JudgeGateway, servers: list[str]
) -> tuple[ToolBackend, list[Path]]:
    """The backend selected by ``[explore] backend``: a cassette file, ``live`` or a URL."""
    spec = cfg.explore.backend
    if spec == "live":
        records = load_servers(cfg.path(cfg.paths.servers))
        endpoints = {record.server_id: record.connection.endpoint for record in records}
        return McpHttpBackend(endpoints), [cfg.path(cfg.paths.servers)]
    if spec.startswith(("http://", "https://")):
        return McpHttpBackend({server: spec for server in servers}, qualified=True), []
    cassette = cfg.path(spec)
    return SimulatorBackend(Simulator(load_cassette(cassette), gateway)), [cassette]


async def explore_stage(cfg: PipelineConfig, gateway: JudgeGateway, options: StageOptions) -> dict:
    graph_path = cfg.path(cfg.paths.graph)
    tool_graph = load_graph(graph_path)
    starts = eligible_start_tools(tool_graph)
    servers = sorted({ref.server_id for ref in tool_graph.nodes})
    backend, backend_inputs = explore_backend(cfg, gateway, servers)
    seed = cfg.options.seed
    opts = cfg.explore
    work = [(start, i) for start in starts for i in range(opts.per_start)]

    async def run(item: tuple[ToolRef, int]) -> Any:
        start, i = item
        dag_id = f"{start.server_id}.{start.tool_name}.{i}"
        LogContext.scope = f"explore:{dag_id}"
        try:
            return await explore(
                start,
                opts.budget,
                backend,
                tool_graph,
                gateway,
                random.Random(f"{seed}:explore:{start}:{i}"),
                dag_id=dag_id,
                frontier_size=opts.frontier,
                floor=Confidence.parse(opts.floor),
                temperature=opts.temperature,
                retries=opts.retries,
            )
        except (BackendUnavailable, NoStartCall) as exc:
            log_warning(f"dropped: {exc}")
            return None

    try:
        results = await map_ordered(run, work, jobs=_jobs(cfg))
    finally:
        if isinstance(backend, McpHttpBackend):
            await backend.aclose()

    dags = []
    for dag in results:
        if dag is None:
            continue
        if not (report := validate_dag(dag, tool_graph.specs)).ok:
            log_warning(f"{dag.dag_id}: invalid DAG dropped: {'; '.join(report.messages())}")
            continue
        dags.append(dag)

    output = cfg.path(cfg.paths.dags)
    save_dags(output, dags, tool_graph.specs.values())
    counts = {
        "start_tools": len(starts),
        "explorations": len(work),
        "dags": len(dags),
        "calls": sum(len(dag.nodes) for dag in dags),
        "failed_calls": sum(len(dag.nodes) - len(dag.completed) for dag in dags),
    }
    write_manifest(
        output, "explore", seed=seed, counts=counts, inputs=[graph_path, *backend_inputs]
    )
    return counts


async def synthesize(cfg: PipelineConfig, gateway: JudgeGateway, options: StageOptions) -> dict:
    dags_path = cfg.path(cfg.paths.dags)
    dags, _ = load_dags(dags_path)

    async def run(dag: Any) -> list[TaskRecord]:
        LogContext.scope = f"synthesize:{dag.dag_id}"
        try:
            return await synthesize_tasks(dag, gateway, cfg.synthesize.variants)
        except NoUsableNodes as exc:
            log_warning(str(exc))
            return []

    batches = await map_ordered(run, sorted(dags, key=lambda d: d.dag_id), jobs=_jobs(cfg))
    tasks = [task for batch in batches for task in batch]
    output = cfg.path(cfg.paths.tasks)
    save_tasks(output, tasks)
    counts = {"dags": len(dags), "tasks": len(tasks)}
    write_manifest(output, "synthesize", seed=cfg.options.seed, counts=counts, inputs=[dags_path])
    return counts


async def validate(cfg: PipelineConfig, gateway: JudgeGateway, options: StageOptions) -> dict:
    tasks_path = cfg.path(cfg.paths.tasks)
    dags_path = cfg.path(cfg.paths.dags)
    tasks = load_tasks(tasks_path)
    dags = {dag.dag_id: dag for dag in load_dags(dags_path)[0]}
    counts = {"candidates": len(tasks), "precheck": 0, "bound": 0, "passed": 0}

    async def run(task: TaskRecord) -> TaskRecord | None:
        LogContext.scope = f"validate:{task.task_id}"
        if not structural_precheck(task):
            return None
        counts["precheck"] += 1
        dag = dags.get(task.source_dag)
        if dag is None:
            log_warning(f"source DAG `{task.source_dag}` not found")
            return None
        try:
            bind_answer(task, dag)
        except (Mismatch, ExtractionFailed) as exc:
            log_warning(str(exc))
            return None
        counts["bound"] += 1
        task.verdict = await validate_task(task, dag, gateway)
        if not task.verdict.passed:
            return None
        counts["passed"] += 1
        return task

    results = await map_ordered(run, sorted(tasks, key=lambda t: t.task_id), jobs=_jobs(cfg))
    validated = [task for task in results if task is not None]
    output = cfg.path(cfg.paths.validated)
    save_tasks(output, validated, funnel=counts)
    log(f"{counts['passed']} of {counts['candidates']} candidate tasks passed validation")
    write_manifest(
        output, "validate", seed=cfg.options.seed, counts=counts, inputs=[tasks_path, dags_path]
    )
    return counts


async def split(cfg: PipelineConfig, gateway: JudgeGateway, options: StageOptions) -> dict:
    validated = cfg.path(cfg.paths.validated)
    tasks = sorted(load_tasks(validated), key=lambda t: t.task_id)
    rng = random.Random(f"{cfg.options.seed}:split")
    shuffled = list(tasks)
    rng.shuffle(shuffled)
    test_ids = {task.task_id for task in shuffled[: cfg.split.test_size]}
    test = [task for task in tasks if task.task_id in test_ids]
    train = [task for task in tasks if task.task_id not in test_ids]
    test_path, train_path = cfg.path(cfg.paths.test), cfg.path(cfg.paths.train)
    save_tasks(test_path, test, split="test")
    save_tasks(train_path, train, split="train")
    counts = {"test": len(test), "train": len(train)}
    write_manifest(
        test_path,
        "split",
        seed=cfg.options.seed,
        counts=counts,
        inputs=[validated],
        outputs=[train_path],
    )
    return counts


async def index(cfg: PipelineConfig, gateway: JudgeGateway, options: StageOptions) -> dict:
    dags_path = cfg.path(cfg.paths.dags)
    validated = cfg.path(cfg.paths.validated)
    dags, specs = load_dags(dags_path)
    tasks = load_tasks(validated) if validated.exists() else []
    call_index = build_index(dags, specs, tasks, top_k=cfg.simulate.top_k)
    output = cfg.path(cfg.paths.cassette)
    save_cassette(output, call_index)
    counts = call_index.stats()
    log(f"indexed {counts['record_count']} calls of {counts['tool_count']} tools")
    write_manifest(
        output, "index", seed=cfg.options.seed, counts=counts, inputs=[dags_path, validated]
    )
    return counts


def _simulator(cfg: PipelineConfig, gateway: JudgeGateway) -> Simulator:
    return Simulator(
        load_cassette(cfg.path(cfg.paths.cassette)),
        gateway,
        overlay_path=cfg.path(cfg.paths.overlay),
    )


async def simulate(cfg: PipelineConfig, gateway: JudgeGateway, options: StageOptions) -> dict:
    simulator = _simulator(cfg, gateway)
    transcript = cfg.simulate.transcript
    server = McpServer(simulator, transcript=cfg.path(transcript) if transcript else None)
    try:
        if options.stdio:
            await serve_stdio(server)
        else:
            await serve_http(server, cfg.simulate.host, cfg.simulate.port)
    finally:
        log(f"served {simulator.counters.total} calls")
    return simulator.counters.as_dict()


async def evaluate(cfg: PipelineConfig, gateway: JudgeGateway, options: StageOptions) -> dict:
    tasks_path = cfg.path(cfg.paths.test)
    tasks = load_tasks(tasks_path)
    simulator = _simulator(cfg, gateway)
    agent = parse_agent(cfg.evaluate.agent, seed=cfg.options.seed)
    rollouts = cfg.evaluate.rollouts
    result = await run_rollouts(tasks, simulator, agent, gateway, rollouts, jobs=_jobs(cfg))

    rewards_path = cfg.path(cfg.paths.rewards)
    write_jsonl(rewards_path, REWARDS_KIND, result.rows, rollouts=rollouts)
    report = {
        "agent": cfg.evaluate.agent,
        **passk_report(result.matrix, cfg.evaluate.k_list),
        "tiers": simulator.counters.as_dict(),
        "reward_via": _via_counts(result.rows),
    }
    report_path = cfg.path(cfg.paths.report)
    _write_json(report_path, report)
    counts = {"tasks": len(tasks), "rollouts": rollouts, **report["mean"]}
    write_manifest(
        report_path,
        "evaluate",
        seed=cfg.options.seed,
        counts=counts,
        inputs=[tasks_path, cfg.path(cfg.paths.cassette)],
        outputs=[rewards_path],
    )
    return counts


def _via_counts(rows: list[dict[str, Any]]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for row in rows:
        counts[row["via"]] = counts.get(row["via"], 0) + 1
    return dict(sorted(counts.items()))


async def curriculum(cfg: PipelineConfig, gateway: JudgeGateway, options: StageOptions) -> dict:
    train_path = cfg.path(cfg.paths.train)
    tasks = load_tasks(train_path)
    opts = cfg.evaluate
    snapshots = await run_curriculum(
        tasks,
        _simulator(cfg, gateway),
        parse_agent(opts.agent, seed=cfg.options.seed),
        gateway,
        batch_size=opts.batch_size,
        rollouts=opts.curriculum_rollouts,
        steps=opts.steps,
        seed=cfg.options.seed,
        threshold=opts.threshold,
        jobs=_jobs(cfg),
    )
    directory = cfg.path(cfg.paths.curriculum)
    for snapshot in snapshots:
        _write_json(directory / f"step-{snapshot['step']:04d}.json", snapshot)
    final = snapshots[-1] if snapshots else {"step": 0, "active": sorted(t.task_id for t in tasks)}
    summary = {
        "steps": len(snapshots),
        "active": len(final["active"]),
        "removed": len(final.get("removed", {})),
    }
    output = directory / "curriculum.json"
    _write_json(output, {**summary, "final": final})
    write_manifest(output, "curriculum", seed=cfg.options.seed, counts=summary, inputs=[train_path])
    return summary


async def stats(cfg: PipelineConfig, gateway: JudgeGateway, options: StageOptions) -> dict:
    validated = cfg.path(cfg.paths.validated)
    dags_path = cfg.path(cfg.paths.dags)
    tasks = load_tasks(validated)
    dags = load_dags(dags_path)[0] if dags_path.exists() else []
    report = corpus_stats(tasks, dags)
    output = cfg.path(cfg.paths.stats)
    _write_json(output, report)
    write_manifest(
        output,
        "stats",
        seed=cfg.options.seed,
        counts={"tasks": report["task_count"]},
        inputs=[validated, dags_path],
    )
    return report


StageFn = Callable[[PipelineConfig, JudgeGateway, StageOptions], Awaitable[dict]]

_STAGE_FNS: dict[str, StageFn] = {
    "ingest": ingest,
    "spot-check": spot_check,
    "graph": graph,
    "explore": explore_stage,
    "synthesize": synthesize,
    "validate": validate,
    "split": split,
    "index": index,
    "simulate": simulate,
    "evaluate": evaluate,
    "curriculum": curriculum,
    "stats": stats,
}


async def run_stage(
    stage: str,
    cfg: PipelineConfig,
    options: StageOptions | None = None,
    gateway: JudgeGateway | None = None,
) -> dict:
    """Run one stage and return the counts it recorded in its manifest."""
    try:
        fn = _STAGE_FNS[stage]
    except KeyError:
        raise UnknownStage(f"unknown stage `{stage}`") from None
    LogContext.scope = stage
    if gateway is None:
        gateway = gateway_from_config(cfg)
    return await fn(cfg, gateway, options or StageOptions())


async def run_pipeline(cfg: PipelineConfig) -> dict[str, dict]:
    """Run every batch stage in order, sharing one judge gateway."""
    gateway = gateway_from_config(cfg)
    return {stage: await run_stage(stage, cfg, gateway=gateway) for stage in PIPELINE}
