from __future__ import annotations

from mcp_forge.cli import corpus_stats
from mcp_forge.forge import TaskRecord, TrajectoryStep
from mcp_forge.schema_core import ToolRef


def task(i: int, difficulty: str, servers: tuple[str, ...]) -> TaskRecord:
    return TaskRecord(
        task_id=f"t{i}",
        prompt="p",
        answer_schema={"a": "{a}"},
        answer_template="{a}",
        difficulty=difficulty,
        selected_nodes=list(range(len(servers))),
        ground_truth={"a": "1"},
        source_dag="d",
        trajectory=[TrajectoryStep(n, ToolRef(s, "tool"), {}) for n, s in enumerate(servers)],
    )


def test_difficulty_shares():
    levels = ["easy"] * 2 + ["medium"] * 7 + ["hard"]
    tasks = [task(i, level, ("s1", "s2") if i == 0 else ("s1",)) for i, level in enumerate(levels)]
    stats = corpus_stats(tasks)

    assert stats["difficulty"] == {
        "easy": {"count": 2, "percent": 20.0},
        "medium": {"count": 7, "percent": 70.0},
        "hard": {"count": 1, "percent": 10.0},
    }
    assert stats["calls"] == {"mean": 1.1, "min": 1, "max": 2}
    assert stats["servers"] == 2
    assert stats["tools"] == 2
    assert stats["multi_server_fraction"] == 0.1
    assert stats["mean_realism"] is None


def test_empty_corpus():
    stats = corpus_stats([])
    assert stats["task_count"] == 0
    assert stats["difficulty"]["easy"] == {"count": 0, "percent": 0.0}
    assert stats["calls"] == {"mean": 0.0, "min": 0, "max": 0}
    assert stats["multi_server_fraction"] == 0.0
