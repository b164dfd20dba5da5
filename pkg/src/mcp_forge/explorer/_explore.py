from __future__ import annotations

import asyncio
import random
from dataclasses import dataclass
from typing import Any

from ..errors import ForgeError
from ..graph import Confidence, ToolGraph, successor_frontier
from ..judge import JudgeGateway, Role, marker, render_prompt
from ..runtime import log, log_debug, log_warning
from ..schema_core import MalformedSchema, ToolRef, canonical_json, canonicalize, validate_args
from ._backend import BackendError, CallResult, ToolBackend, error_payload
from ._dag import CallDag, CallNode

DEFAULT_BUDGET = 6
DEFAULT_FRONTIER = 8


class BudgetInvalid(ForgeError):
    """The tool-call budget is below one."""


class BackendUnavailable(ForgeError):
    """The start call could not be executed."""


class NoStartCall(ForgeError):
    """The explorer agent proposed no executable call of the start tool."""


@dataclass(frozen=True)
class PlannedCall:
    tool: ToolRef
    args: Any
    parents: tuple[int, ...]


def explorer_prompt(
    start: ToolRef,
    round_number: int,
    budget_remaining: int,
    allowed: list[ToolRef],
    graph: ToolGraph,
    dag: CallDag,
) -> str:
    allowed_lines = "\n".join(
        f"{marker('tool', ref)}\n"
        f"  description: {graph.specs[ref].description}\n"
        f"  input_schema: {canonical_json(graph.specs[ref].input_schema)}"
        for ref in allowed
    )
    executed = "\n".join(
        f"node {node.node_id}: {marker('tool', node.tool)}"
        f"{' (failed)' if node.is_error else ''}\n"
        f"  args: {canonical_json(node.args)}\n"
        f"  output: {canonical_json(node.output)}"
        for node in dag.nodes
    )
    return render_prompt(
        Role.EXPLORER_AGENT,
        start=marker("start_tool", start),
        round=marker("round", round_number),
        budget_remaining=budget_remaining,
        allowed=allowed_lines or "(none)",
        executed=executed or "(none)",
    )


def plan_calls(
    decision: dict[str, Any], allowed: list[ToolRef], graph: ToolGraph, dag: CallDag
) -> list[PlannedCall]:
    """Turn an agent decision into executable calls.

    Calls naming a tool outside ``allowed``, with arguments failing the tool's schema or with a
    failed parent node are dropped with a warning.
    """
    action = decision["action"]
    calls = decision.get("calls") or []
    if action == "stop":
        return []
    if action in ("sequential", "fan_in") and len(calls) > 1:
        log_warning(f"`{action}` proposes {len(calls)} calls, only the first is used")
        calls = calls[:1]

    planned = []
    for call in calls:
        try:
            tool = ToolRef.parse(call["tool"])
        except MalformedSchema as exc:
            log_warning(f"skipping call: {exc}")
            continue
        if tool not in allowed:
            log_warning(f"skipping call of {tool}: not among the allowed tools")
            continue
        report = validate_args(graph.specs[tool], call["args"])
        if not report.ok:
            log_warning(f"skipping call of {tool}: {'; '.join(report.messages())}")
            continue
        parents = []
        failed = []
        for parent in sorted(set(call.get("parents") or [])):
            node = dag.node(parent)
            if node is None:
                log_warning(f"call of {tool}: ignoring unknown parent node {parent}")
            elif node.is_error:
                failed.append(parent)
            else:
                parents.append(parent)
        if failed:
            log_warning(f"skipping call of {tool}: parent nodes {failed} failed")
            continue
        planned.append(PlannedCall(tool, canonicalize(call["args"]), tuple(parents)))
    return planned


async def _execute(backend: ToolBackend, call: PlannedCall, retries: int) -> CallResult:
    last_error: BackendError | None = None
    for attempt in range(1 + retries):
        try:
            return await backend.call(call.tool, call.args)
        except BackendError as exc:
            last_error = exc
            log_debug(f"call of {call.tool} failed (attempt {attempt + 1}): {exc}")
    assert last_error is not None
    raise last_error


async def explore(
    start: ToolRef,
    budget: int,
    backend: ToolBackend,
    graph: ToolGraph,
    gateway: JudgeGateway,
    rng: random.Random,
    *,
    dag_id: str = "dag-0",
    frontier_size: int = DEFAULT_FRONTIER,
    floor: Confidence = Confidence.MEDIUM,
    temperature: float = 0.0,
    retries: int = 2,
) -> CallDag:
    """Build a DAG of executed calls starting from ``start``.

    Each round the explorer agent sees the tools it may call (the start tool in the first round,
    afterwards a sampled successor frontier of the successfully called tools plus every tool
    already called) and all earlier calls, and picks an action. The exploration ends when the
    budget is exhausted, the frontier is empty, the agent stops or a round yields no executable
    call. Calls of one round run concurrently but become nodes in the order the agent listed them.
    """
    if budget < 1:
        raise BudgetInvalid(f"budget must be at least 1, got {budget}")
    if start not in graph.specs:
        raise NoStartCall(f"start tool {start} is not part of the graph")

    dag = CallDag(dag_id=dag_id, start_tool=start)
    round_number = 0
    while len(dag.nodes) < budget:
        remaining = budget - len(dag.nodes)
        if round_number == 0:
            allowed = [start]
        else:
            completed = [node.tool for node in dag.completed]
            frontier = successor_frontier(graph, completed, floor, frontier_size, rng)
            if not frontier:
                log_debug("no successors remain")
                break
            allowed = sorted(set(frontier) | {node.tool for node in dag.nodes})

        prompt = explorer_prompt(start, round_number, remaining, allowed, graph, dag)
        decision = await gateway.ask(Role.EXPLORER_AGENT, prompt, temperature=temperature)
        planned = plan_calls(decision, allowed, graph, dag)[:remaining]
        if round_number == 0:
            planned = [PlannedCall(call.tool, call.args, ()) for call in planned]
        if not planned:
            log_debug(f"round {round_number}: no executable calls ({decision['action']})")
            break

        results = await asyncio.gather(
            *(_execute(backend, call, retries) for call in planned), return_exceptions=True
        )
        for call, result in zip(planned, results):
            if isinstance(result, BaseException):
                if not isinstance(result, BackendError):
                    raise result
                if round_number == 0:
                    raise BackendUnavailable(f"start call of {start} failed: {result}") from result
                result = CallResult(error_payload("backend_unavailable", str(result)), True)
            node_id = len(dag.nodes)
            node = CallNode(node_id, call.tool, call.args, result.output, result.is_error)
            dag.nodes.append(node)
            dag.edges.extend((parent, node_id) for parent in call.parents)
        log_debug(f"round {round_number}: {decision['action']} with {len(planned)} calls")
        round_number += 1

    if not dag.nodes:
        raise NoStartCall(f"the explorer agent proposed no executable call of {start}")
    dag.budget_used = len(dag.nodes)
    log(f"{dag_id}: {len(dag.nodes)} calls, {len(dag.edges)} edges")
    return dag
