from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

from ..artifacts import read_jsonl, write_jsonl
from ..errors import InputError
from ..schema_core import ToolRef

TASKS_KIND = "tasks"
DIFFICULTIES = ("easy", "medium", "hard")
REALISM_THRESHOLD = 5

_PLACEHOLDER_RE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


def placeholders(text: str) -> set[str]:
    return set(_PLACEHOLDER_RE.findall(text))


@dataclass
class ValidationVerdict:
    verifiable: bool
    well_specified: bool
    interpretable: bool
    realism: int
    difficulty_calibrated: bool
    rationale: str = ""

    @property
    def passed(self) -> bool:
        return (
            self.verifiable
            and self.well_specified
            and self.interpretable
            and self.realism >= REALISM_THRESHOLD
            and self.difficulty_calibrated
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "verifiable": self.verifiable,
            "well_specified": self.well_specified,
            "interpretable": self.interpretable,
            "realism": self.realism,
            "difficulty_calibrated": self.difficulty_calibrated,
            "pass": self.passed,
            "rationale": self.rationale,
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> ValidationVerdict:
        return cls(
            verifiable=bool(data["verifiable"]),
            well_specified=bool(data["well_specified"]),
            interpretable=bool(data["interpretable"]),
            realism=int(data["realism"]),
            difficulty_calibrated=bool(data["difficulty_calibrated"]),
            rationale=str(data.get("rationale", "")),
        )


@dataclass(frozen=True)
class TrajectoryStep:
    node_id: int
    tool: ToolRef
    args: Any

    def to_json(self) -> dict[str, Any]:
        return {"node_id": self.node_id, "tool": str(self.tool), "args": self.args}


@dataclass
class TaskRecord:
    task_id: str
    prompt: str
    answer_schema: dict[str, Any]
    answer_template: str
    difficulty: str
    selected_nodes: list[int]
    ground_truth: dict[str, str]
    source_dag: str
    extraction: dict[str, Any] = field(default_factory=dict)
    """Where each answer field comes from, re-checked by `bind_answer`."""
    trajectory: list[TrajectoryStep] = field(default_factory=list)
    """The ground-truth calls, one per selected node."""
    verdict: ValidationVerdict | None = None

    @property
    def fields(self) -> list[str]:
        return sorted(self.answer_schema)

    @property
    def tools(self) -> list[ToolRef]:
        return sorted({step.tool for step in self.trajectory})

    @property
    def servers(self) -> list[str]:
        return sorted({step.tool.server_id for step in self.trajectory})

    def to_json(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "task_id": self.task_id,
            "prompt": self.prompt,
            "answer_schema": self.answer_schema,
            "answer_template": self.answer_template,
            "difficulty": self.difficulty,
            "selected_nodes": self.selected_nodes,
            "ground_truth": self.ground_truth,
            "source_dag": self.source_dag,
            "extraction": self.extraction,
            "trajectory": [step.to_json() for step in self.trajectory],
        }
        if self.verdict is not None:
            data["verdict"] = self.verdict.to_json()
        return data

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> TaskRecord:
        verdict = data.get("verdict")
        return cls(
            task_id=str(data["task_id"]),
            prompt=str(data["prompt"]),
            answer_schema=dict(data["answer_schema"]),
            answer_template=str(data["answer_template"]),
            difficulty=str(data["difficulty"]),
            selected_nodes=[int(n) for n in data["selected_nodes"]],
            ground_truth=dict(data["ground_truth"]),
            source_dag=str(data["source_dag"]),
            extraction=dict(data.get("extraction", {})),
            trajectory=[
                TrajectoryStep(int(s["node_id"]), ToolRef.parse(s["tool"]), s["args"])
                for s in data.get("trajectory", [])
            ],
            verdict=ValidationVerdict.from_json(verdict) if isinstance(verdict, dict) else None,
        )


def render_answer(task: TaskRecord, values: Mapping[str, Any] | None = None) -> str:
    """Fill the answer template, by default with the ground truth."""
    values = task.ground_truth if values is None else values

    def replace(match: re.Match[str]) -> str:
        value = values.get(match.group(1))
        return match.group(0) if value is None else str(value)

    return _PLACEHOLDER_RE.sub(replace, task.answer_template)


def save_tasks(path: str | Path, tasks: Iterable[TaskRecord], **header: Any) -> int:
    return write_jsonl(path, TASKS_KIND, (task.to_json() for task in tasks), **header)


def load_tasks(path: str | Path) -> list[TaskRecord]:
    _, records = read_jsonl(path, TASKS_KIND)
    tasks = []
    for i, record in enumerate(records):
        try:
            tasks.append(TaskRecord.from_json(record))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{path}:{i + 2}", f"malformed task record: {exc}") from None
    return tasks
