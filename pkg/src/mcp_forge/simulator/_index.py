from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Mapping

from ..artifacts import read_jsonl, write_jsonl
from ..errors import InputError
from ..explorer import CallDag
from ..schema_core import MalformedSchema, ToolRef, ToolSpec, canonical_hash, canonicalize
from ..schema_core import canonical_json, parse_tool_spec

CASSETTE_KIND = "cassette"
DEFAULT_TOP_K = 5

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def call_digest(tool: ToolRef, args: Any) -> str:
    """Index key of a call: the digest of ``{"tool": "<server_id>/<tool_name>", "args": ...}``."""
    return canonical_hash({"tool": str(tool), "args": args})


@dataclass(frozen=True)
class ToolCallRecord:
    record_id: str
    dag_id: str
    node_id: int
    tool: ToolRef
    args: Any
    output: Any

    def __post_init__(self) -> None:
        object.__setattr__(self, "args", canonicalize(self.args))
        object.__setattr__(self, "output", canonicalize(self.output))

    @property
    def digest(self) -> str:
        return call_digest(self.tool, self.args)

    @property
    def order_key(self) -> tuple[str, int]:
        return (self.dag_id, self.node_id)

    def to_json(self) -> dict[str, Any]:
        return {
            "record_id": self.record_id,
            "dag_id": self.dag_id,
            "node_id": self.node_id,
            "tool": str(self.tool),
            "args": self.args,
            "output": self.output,
            "digest": self.digest,
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> ToolCallRecord:
        return cls(
            record_id=str(data["record_id"]),
            dag_id=str(data["dag_id"]),
            node_id=int(data["node_id"]),
            tool=ToolRef.parse(data["tool"]),
            args=data["args"],
            output=data["output"],
        )


@dataclass
class CallIndex:
    exact: dict[str, ToolCallRecord] = field(default_factory=dict)
    by_tool: dict[ToolRef, list[ToolCallRecord]] = field(default_factory=dict)
    generated: dict[str, ToolCallRecord] = field(default_factory=dict)
    """Write-through overlay of generated outputs, keyed like ``exact``."""
    tool_specs: dict[ToolRef, ToolSpec] = field(default_factory=dict)
    aliases: dict[str, str] = field(default_factory=dict)
    """Record ids of dropped duplicate calls, mapped to the record that was kept."""
    task_records: dict[str, list[str]] = field(default_factory=dict)
    """Ground-truth record ids per task id."""
    top_k: int = DEFAULT_TOP_K

    def insert(self, record: ToolCallRecord) -> bool:
        """Add a recorded call; a call whose digest is already present becomes an alias."""
        digest = record.digest
        if (kept := self.exact.get(digest)) is not None:
            self.aliases[record.record_id] = kept.record_id
            return False
        self.exact[digest] = record
        self.by_tool.setdefault(record.tool, []).append(record)
        return True

    def lookup(self, digest: str) -> ToolCallRecord | None:
        return self.exact.get(digest) or self.generated.get(digest)

    def canonical_record_id(self, record_id: str) -> str:
        return self.aliases.get(record_id, record_id)

    def ground_truth_ids(self, task_id: str | None) -> set[str]:
        if task_id is None:
            return set()
        return {self.canonical_record_id(rid) for rid in self.task_records.get(task_id, [])}

    def stats(self) -> dict[str, Any]:
        return {
            "record_count": len(self.exact),
            "generated_count": len(self.generated),
            "alias_count": len(self.aliases),
            "tool_count": len(self.tool_specs),
            "per_tool": {str(ref): len(records) for ref, records in sorted(self.by_tool.items())},
        }


def build_index(
    dags: Iterable[CallDag],
    specs: Mapping[ToolRef, ToolSpec] | Iterable[ToolSpec],
    tasks: Iterable[Any] = (),
    *,
    top_k: int = DEFAULT_TOP_K,
) -> CallIndex:
    """Index every successful call of the DAGs, in ``(dag_id, node_id)`` order.

    ``tasks`` are task records whose ground-truth trajectories are remembered so that the
    simulator can prioritize them.
    """
    if isinstance(specs, Mapping):
        specs = specs.values()
    index = CallIndex(tool_specs={spec.ref: spec for spec in specs}, top_k=top_k)
    for dag in sorted(dags, key=lambda d: d.dag_id):
        for node in sorted(dag.nodes, key=lambda n: n.node_id):
            if node.is_error:
                continue
            index.insert(
                ToolCallRecord(
                    f"{dag.dag_id}:{node.node_id}",
                    dag.dag_id,
                    node.node_id,
                    node.tool,
                    node.args,
                    node.output,
                )
            )
    for task in tasks:
        index.task_records[task.task_id] = [
            f"{task.source_dag}:{node_id}" for node_id in task.selected_nodes
        ]
    for records in index.by_tool.values():
        records.sort(key=lambda r: r.order_key)
    return index


def arg_features(args: Any) -> frozenset[tuple[str, str]]:
    """The set of ``(json path, token)`` pairs of a value's leaves.

    Tokens are the lowercase alphanumeric runs of each leaf's text; array positions are not part
    of the path.
    """
    features: set[tuple[str, str]] = set()

    def walk(value: Any, path: str) -> None:
        if isinstance(value, dict):
            for key, item in value.items():
                walk(item, f"{path}/{key}")
        elif isinstance(value, list):
            for item in value:
                walk(item, f"{path}/[]")
        else:
            text = value if isinstance(value, str) else canonical_json(value)
            for token in _TOKEN_RE.findall(text.lower()):
                features.add((path, token))

    walk(canonicalize(args), "")
    return frozenset(features)


def jaccard(a: frozenset[Any], b: frozenset[Any]) -> Fraction:
    if not a and not b:
        return Fraction(1)
    return Fraction(len(a & b), len(a | b))


def scored_similar(
    index: CallIndex,
    tool: ToolRef,
    args: Any,
    k: int,
    priority: Iterable[str] = (),
) -> list[tuple[ToolCallRecord, Fraction]]:
    """Records of ``tool`` with their similarity to ``args``, best first.

    Records named in ``priority`` come before all others; within each group records are ordered by
    descending similarity, then by ``(dag_id, node_id)``.
    """
    query = arg_features(args)
    promoted = set(priority)
    scored = [
        (record, jaccard(query, arg_features(record.args)))
        for record in index.by_tool.get(tool, [])
    ]
    scored.sort(key=lambda pair: (pair[0].record_id not in promoted, -pair[1], pair[0].order_key))
    return scored[: max(0, k)]


def rank_similar(
    index: CallIndex, tool: ToolRef, args: Any, k: int, priority: Iterable[str] = ()
) -> list[ToolCallRecord]:
    return [record for record, _ in scored_similar(index, tool, args, k, priority)]


def save_cassette(path: str | Path, index: CallIndex) -> int:
    """Write a cassette of ``tool`` lines, then ``record``, ``alias`` and ``task`` lines."""

    def lines() -> Iterable[dict[str, Any]]:
        for ref in sorted(index.tool_specs):
            yield {"type": "tool", **index.tool_specs[ref].to_json()}
        for record in sorted(index.exact.values(), key=lambda r: r.order_key):
            yield {"type": "record", **record.to_json()}
        for record_id in sorted(index.aliases):
            yield {"type": "alias", "record_id": record_id, "target": index.aliases[record_id]}
        for task_id in sorted(index.task_records):
            yield {"type": "task", "task_id": task_id, "records": index.task_records[task_id]}

    return write_jsonl(path, CASSETTE_KIND, lines(), top_k=index.top_k, stats=index.stats())


def load_cassette(path: str | Path) -> CallIndex:
    header, records = read_jsonl(path, CASSETTE_KIND)
    index = CallIndex(top_k=int(header.get("top_k", DEFAULT_TOP_K)))
    try:
        for i, line in enumerate(records):
            kind = line.get("type")
            if kind == "tool":
                spec = parse_tool_spec({k: v for k, v in line.items() if k != "type"})
                index.tool_specs[spec.ref] = spec
            elif kind == "record":
                record = ToolCallRecord.from_json(line)
                if "digest" in line and line["digest"] != record.digest:
                    raise InputError(f"{path}:{i + 2}", "record digest does not match its call")
                index.insert(record)
            elif kind == "alias":
                index.aliases[str(line["record_id"])] = str(line["target"])
            elif kind == "task":
                index.task_records[str(line["task_id"])] = [str(r) for r in line["records"]]
            else:
                raise InputError(f"{path}:{i + 2}", f"unknown cassette line type {kind!r}")
    except (KeyError, TypeError, ValueError, AttributeError, MalformedSchema) as exc:
        raise InputError(str(path), f"malformed cassette: {exc}") from None
    for by_tool in index.by_tool.values():
        by_tool.sort(key=lambda r: r.order_key)
    return index
