from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

from ..artifacts import read_jsonl, write_jsonl
from ..errors import InputError
from ..schema_core import (
    MalformedSchema,
    ToolRef,
    ToolSpec,
    canonical_hash,
    canonicalize,
    parse_tool_spec,
    validate_args,
)

DAGS_KIND = "call_dags"


@dataclass(frozen=True)
class CallNode:
    """One executed call: the tool, its arguments and what it returned."""

    node_id: int
    tool: ToolRef
    args: Any
    output: Any
    is_error: bool = False
    """Whether ``output`` is an error payload rather than a tool result."""

    def __post_init__(self) -> None:
        object.__setattr__(self, "args", canonicalize(self.args))
        object.__setattr__(self, "output", canonicalize(self.output))

    @property
    def args_digest(self) -> str:
        return canonical_hash(self.args)

    def to_json(self) -> dict[str, Any]:
        return {
            "node_id": self.node_id,
            "tool": str(self.tool),
            "args": self.args,
            "args_digest": self.args_digest,
            "output": self.output,
            "is_error": self.is_error,
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> CallNode:
        return cls(
            node_id=int(data["node_id"]),
            tool=ToolRef.parse(data["tool"]),
            args=data["args"],
            output=data.get("output"),
            is_error=bool(data.get("is_error", False)),
        )


@dataclass
class CallDag:
    dag_id: str
    start_tool: ToolRef
    nodes: list[CallNode] = field(default_factory=list)
    edges: list[tuple[int, int]] = field(default_factory=list)
    """Data flow edges ``(parent node_id, child node_id)``."""
    budget_used: int = 0

    def node(self, node_id: int) -> CallNode | None:
        if 0 <= node_id < len(self.nodes) and self.nodes[node_id].node_id == node_id:
            return self.nodes[node_id]
        return next((node for node in self.nodes if node.node_id == node_id), None)

    @property
    def completed(self) -> list[CallNode]:
        """Nodes whose call succeeded."""
        return [node for node in self.nodes if not node.is_error]

    def parents(self, node_id: int) -> list[int]:
        return sorted(parent for parent, child in self.edges if child == node_id)

    def to_json(self) -> dict[str, Any]:
        return {
            "dag_id": self.dag_id,
            "start_tool": str(self.start_tool),
            "nodes": [node.to_json() for node in self.nodes],
            "edges": [list(edge) for edge in self.edges],
            "budget_used": self.budget_used,
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> CallDag:
        return cls(
            dag_id=str(data["dag_id"]),
            start_tool=ToolRef.parse(data["start_tool"]),
            nodes=[CallNode.from_json(node) for node in data["nodes"]],
            edges=[(int(parent), int(child)) for parent, child in data["edges"]],
            budget_used=int(data["budget_used"]),
        )


@dataclass
class DagReport:
    cycles: list[str] = field(default_factory=list)
    ordering: list[str] = field(default_factory=list)
    schema: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    structure: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.cycles or self.ordering or self.schema or self.outputs or self.structure)

    def __bool__(self) -> bool:
        return self.ok

    def messages(self) -> list[str]:
        return [*self.structure, *self.cycles, *self.ordering, *self.schema, *self.outputs]


def _has_cycle(node_ids: Iterable[int], edges: list[tuple[int, int]]) -> bool:
    indegree = {node_id: 0 for node_id in node_ids}
    children: dict[int, list[int]] = {node_id: [] for node_id in indegree}
    for parent, child in edges:
        if parent in indegree and child in indegree:
            children[parent].append(child)
            indegree[child] += 1
    queue = deque(node_id for node_id, degree in indegree.items() if degree == 0)
    visited = 0
    while queue:
        node_id = queue.popleft()
        visited += 1
        for child in children[node_id]:
            indegree[child] -= 1
            if indegree[child] == 0:
                queue.append(child)
    return visited != len(indegree)


def validate_dag(dag: CallDag, specs: Mapping[ToolRef, ToolSpec] | None = None) -> DagReport:
    """Structural checks of an explored DAG.

    Without ``specs`` the argument schemas are not checked; a node whose tool is missing from a
    given ``specs`` mapping is reported as a schema problem.
    """
    report = DagReport()
    ids = [node.node_id for node in dag.nodes]
    if ids != list(range(len(ids))):
        report.structure.append(f"node ids are not sequential from 0: {ids}")
    if dag.budget_used != len(dag.nodes):
        report.structure.append(
            f"budget_used is {dag.budget_used} but the DAG has {len(dag.nodes)} nodes"
        )
    known = set(ids)
    for parent, child in dag.edges:
        if parent not in known or child not in known:
            report.structure.append(f"edge ({parent}, {child}) references an unknown node")
        elif parent >= child:
            report.ordering.append(f"edge ({parent}, {child}) does not point to a later node")
    if _has_cycle(ids, dag.edges):
        report.cycles.append("the edges contain a cycle")
    for node in dag.nodes:
        if node.output is None:
            report.outputs.append(f"node {node.node_id} has no output")
        if specs is None:
            continue
        spec = specs.get(node.tool)
        if spec is None:
            report.schema.append(f"node {node.node_id}: unknown tool {node.tool}")
            continue
        for message in validate_args(spec, node.args).messages():
            report.schema.append(f"node {node.node_id}: {message}")
    return report


def save_dags(path: str | Path, dags: Iterable[CallDag], specs: Iterable[ToolSpec] = ()) -> int:
    """Write ``dags.jsonl``; the header carries the specs of the tools the DAGs use."""
    return write_jsonl(
        path,
        DAGS_KIND,
        (dag.to_json() for dag in dags),
        tools=[spec.to_json() for spec in sorted(specs, key=lambda s: s.ref)],
    )


def load_dags(path: str | Path) -> tuple[list[CallDag], dict[ToolRef, ToolSpec]]:
    header, records = read_jsonl(path, DAGS_KIND)
    try:
        specs = {spec.ref: spec for spec in map(parse_tool_spec, header.get("tools", []))}
        dags = [CallDag.from_json(record) for record in records]
    except (KeyError, TypeError, ValueError, MalformedSchema) as exc:
        raise InputError(str(path), f"malformed DAG record: {exc}") from None
    return dags, specs
