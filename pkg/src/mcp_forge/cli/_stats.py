from __future__ import annotations

from typing import Any, Iterable

from ..explorer import CallDag
from ..forge import DIFFICULTIES, TaskRecord


def _mean(values: list[int]) -> float:
    return round(sum(values) / len(values), 6) if values else 0.0


def corpus_stats(tasks: Iterable[TaskRecord], dags: Iterable[CallDag] = ()) -> dict[str, Any]:
    """Summary statistics of a task corpus. An empty corpus gives a zeroed report."""
    tasks = sorted(tasks, key=lambda t: t.task_id)
    dags = list(dags)
    total = len(tasks)
    calls = [len(task.trajectory) for task in tasks]
    fields = [len(task.answer_schema) for task in tasks]
    realism = [task.verdict.realism for task in tasks if task.verdict is not None]
    multi_server = sum(1 for task in tasks if len(task.servers) > 1)

    difficulty = {}
    for level in DIFFICULTIES:
        count = sum(1 for task in tasks if task.difficulty == level)
        difficulty[level] = {
            "count": count,
            "percent": round(100 * count / total, 2) if total else 0.0,
        }

    return {
        "task_count": total,
        "difficulty": difficulty,
        "calls": {
            "mean": _mean(calls),
            "min": min(calls, default=0),
            "max": max(calls, default=0),
        },
        "mean_fields": _mean(fields),
        "servers": len({server for task in tasks for server in task.servers}),
        "tools": len({tool for task in tasks for tool in task.tools}),
        "multi_server_fraction": round(multi_server / total, 6) if total else 0.0,
        "mean_realism": _mean(realism) if realism else None,
        "dag_count": len(dags),
        "dag_calls": sum(len(dag.nodes) for dag in dags),
    }
