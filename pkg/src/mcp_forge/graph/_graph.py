from __future__ import annotations

import enum
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from ..artifacts import append_jsonl, iter_json_lines, read_jsonl, write_jsonl
from ..errors import InputError
from ..judge import JudgeGateway, Role, marker, render_prompt
from ..runtime import log, log_debug, map_ordered
from ..schema_core import MalformedSchema, ToolRef, ToolSpec, canonical_json, parse_tool_spec

GRAPH_KIND = "tool_graph"


class Confidence(enum.IntEnum):
    LOW = 0
    MEDIUM = 1
    HIGH = 2

    def __str__(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, text: str) -> Confidence:
        try:
            return cls[text.upper()]
        except KeyError:
            raise ValueError(f"unknown confidence {text!r}") from None


@dataclass(frozen=True, order=True)
class GraphEdge:
    src: ToolRef
    dst: ToolRef
    confidence: Confidence

    def to_json(self) -> dict[str, str]:
        return {"src": str(self.src), "dst": str(self.dst), "confidence": str(self.confidence)}


@dataclass
class ToolGraph:
    """Directed tool compatibility graph.

    Self-edges are allowed and mean that a tool's output can seed another call of the same tool.
    """

    specs: dict[ToolRef, ToolSpec] = field(default_factory=dict)
    adjacency: dict[ToolRef, dict[ToolRef, Confidence]] = field(default_factory=dict)

    @property
    def nodes(self) -> list[ToolRef]:
        return sorted(self.specs)

    def add_edge(self, edge: GraphEdge) -> None:
        self.adjacency.setdefault(edge.src, {})[edge.dst] = edge.confidence

    def edges(self) -> list[GraphEdge]:
        return sorted(
            GraphEdge(src, dst, confidence)
            for src, successors in self.adjacency.items()
            for dst, confidence in successors.items()
        )

    def successors(self, ref: ToolRef, floor: Confidence = Confidence.LOW) -> list[ToolRef]:
        successors = self.adjacency.get(ref, {})
        return sorted(dst for dst, confidence in successors.items() if confidence >= floor)

    def successor_counts(self, ref: ToolRef) -> dict[Confidence, int]:
        counts = Counter(self.adjacency.get(ref, {}).values())
        return {confidence: counts.get(confidence, 0) for confidence in Confidence}

    def stats(self) -> dict[str, Any]:
        edges = self.edges()
        by_confidence = Counter(str(edge.confidence) for edge in edges)
        intra = sum(1 for edge in edges if edge.src.server_id == edge.dst.server_id)
        return {
            "node_count": len(self.specs),
            "edge_count": len(edges),
            "mean_out_degree": len(edges) / len(self.specs) if self.specs else 0.0,
            "medium_or_higher": sum(1 for e in edges if e.confidence >= Confidence.MEDIUM),
            "by_confidence": {str(c): by_confidence.get(str(c), 0) for c in Confidence},
            "intra_server": intra,
            "cross_server": len(edges) - intra,
        }


def edge_prompt(src: ToolSpec, dst: ToolSpec) -> str:
    return render_prompt(
        Role.EDGE_JUDGE,
        source=marker("source_tool", src.ref),
        source_description=src.description,
        source_schema=canonical_json(src.input_schema),
        destination=marker("destination_tool", dst.ref),
        destination_description=dst.description,
        destination_schema=canonical_json(dst.input_schema),
    )


async def judge_edge(src: ToolSpec, dst: ToolSpec, gateway: JudgeGateway) -> GraphEdge | None:
    """Ask the edge judge whether ``src`` output can feed ``dst``; `None` when not chainable."""
    verdict = await gateway.ask(Role.EDGE_JUDGE, edge_prompt(src, dst))
    if not verdict["chainable"]:
        return None
    return GraphEdge(src.ref, dst.ref, Confidence.parse(verdict.get("confidence", "low")))


_DATA_TYPES = {"string", "number", "integer", "array", "object"}


def prefilter_pair(src: ToolSpec, dst: ToolSpec) -> bool:
    """Cheap lexical check, `False` for pairs that cannot be chained.

    A destination needs at least one parameter able to carry a value derived from another
    tool's output.
    """
    for schema in dst.parameters.values():
        if not isinstance(schema, dict):
            return True
        declared = schema.get("type")
        types = set(declared) if isinstance(declared, list) else {declared}
        if None in types or types & _DATA_TYPES:
            return True
    return False


def _load_checkpoint(path: Path) -> dict[tuple[ToolRef, ToolRef], Confidence | None]:
    judged: dict[tuple[ToolRef, ToolRef], Confidence | None] = {}
    for number, record in iter_json_lines(path):
        try:
            confidence = record["confidence"]
            judged[ToolRef.parse(record["src"]), ToolRef.parse(record["dst"])] = (
                None if confidence is None else Confidence.parse(confidence)
            )
        except (KeyError, TypeError, ValueError, MalformedSchema):
            raise InputError(f"{path}:{number}", "malformed graph checkpoint record") from None
    return judged


async def build_graph(
    tools: Iterable[ToolSpec],
    gateway: JudgeGateway,
    *,
    prefilter: bool = False,
    checkpoint: str | Path | None = None,
    jobs: int | None = None,
) -> ToolGraph:
    """Judge every ordered pair of tools (self pairs included) and assemble the graph.

    With ``checkpoint`` every judged pair is appended to that file and pairs already present are
    not judged again, so an interrupted build resumes where it stopped.
    """
    graph = ToolGraph(specs={tool.ref: tool for tool in tools})
    nodes = graph.nodes
    pairs = [(src, dst) for src in nodes for dst in nodes]

    judged: dict[tuple[ToolRef, ToolRef], Confidence | None] = {}
    checkpoint = Path(checkpoint) if checkpoint else None
    if checkpoint is not None and checkpoint.exists():
        judged = _load_checkpoint(checkpoint)
        log(f"resuming from {len(judged)} judged pairs in {checkpoint}")

    todo = []
    skipped = 0
    for src, dst in pairs:
        if (src, dst) in judged:
            continue
        if prefilter and not prefilter_pair(graph.specs[src], graph.specs[dst]):
            log_debug(f"prefilter skipped {src} -> {dst}")
            skipped += 1
            continue
        todo.append((src, dst))

    async def judge(pair: tuple[ToolRef, ToolRef]) -> GraphEdge | None:
        src, dst = pair
        edge = await judge_edge(graph.specs[src], graph.specs[dst], gateway)
        if checkpoint is not None:
            append_jsonl(
                checkpoint,
                {"src": str(src), "dst": str(dst), "confidence": edge and str(edge.confidence)},
            )
        return edge

    results = await map_ordered(judge, todo, jobs=jobs)
    for (src, dst), edge in zip(todo, results):
        judged[src, dst] = edge and edge.confidence

    for (src, dst), confidence in sorted(judged.items()):
        if confidence is not None and src in graph.specs and dst in graph.specs:
            graph.add_edge(GraphEdge(src, dst, confidence))

    log(
        f"judged {len(todo)} pairs ({skipped} prefiltered), "
        f"{len(graph.edges())} edges over {len(nodes)} tools"
    )
    return graph


def eligible_start_tools(graph: ToolGraph) -> list[ToolRef]:
    """Tools with at least two distinct high-confidence successors, sorted."""
    return [ref for ref in graph.nodes if len(graph.successors(ref, Confidence.HIGH)) >= 2]


def successor_frontier(
    graph: ToolGraph,
    completed: Iterable[ToolRef],
    floor: Confidence,
    sample_size: int,
    rng: random.Random,
) -> list[ToolRef]:
    """Sample, without replacement, successors at or above ``floor`` of any completed tool."""
    candidates = sorted({dst for ref in set(completed) for dst in graph.successors(ref, floor)})
    return rng.sample(candidates, min(sample_size, len(candidates)))


def save_graph(path: str | Path, graph: ToolGraph) -> int:
    return write_jsonl(
        path,
        GRAPH_KIND,
        (edge.to_json() for edge in graph.edges()),
        nodes=[graph.specs[ref].to_json() for ref in graph.nodes],
        stats=graph.stats(),
    )


def load_graph(path: str | Path) -> ToolGraph:
    header, records = read_jsonl(path, GRAPH_KIND)
    graph = ToolGraph()
    try:
        for node in header.get("nodes", []):
            spec = parse_tool_spec(node)
            graph.specs[spec.ref] = spec
        for record in records:
            graph.add_edge(
                GraphEdge(
                    ToolRef.parse(record["src"]),
                    ToolRef.parse(record["dst"]),
                    Confidence.parse(record["confidence"]),
                )
            )
    except (KeyError, TypeError, ValueError, MalformedSchema) as exc:
        raise InputError(str(path), f"malformed tool graph: {exc}") from None
    return graph
