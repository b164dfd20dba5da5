from __future__ import annotations

from mcp_forge.evaluation import ScriptedAgent, run_curriculum, run_rollouts
from mcp_forge.runtime import run_loop
from mcp_forge.simulator import Simulator, load_cassette

from tests.test_utils import FIXTURES, fixture_gateway, fixture_tasks


def simulator() -> Simulator:
    return Simulator(load_cassette(FIXTURES / "recordings.jsonl"), fixture_gateway())


def test_rollouts():
    tasks = fixture_tasks()
    sim = simulator()
    result = run_loop(
        lambda: run_rollouts(reversed(tasks), sim, ScriptedAgent(), fixture_gateway(), 3, jobs=2)
    )

    ids = sorted(task.task_id for task in tasks)
    assert list(result.matrix.rewards) == ids
    assert all(vector == [1, 1, 1] for vector in result.matrix.rewards.values())
    assert [(row["task_id"], row["rollout_idx"]) for row in result.rows] == [
        (task_id, index) for task_id in ids for index in range(3)
    ]
    assert {row["via"] for row in result.rows} == {"exact"}
    assert sim.counters.fuzzy == sim.counters.no_data == 0


def test_rollouts_with_failures():
    tasks = fixture_tasks()
    result = run_loop(
        lambda: run_rollouts(tasks, simulator(), ScriptedAgent(1.0), fixture_gateway(), 2)
    )
    assert all(vector == [0, 0] for vector in result.matrix.rewards.values())
    assert {row["via"] for row in result.rows} == {"judge"}


def test_curriculum_keeps_prompts_below_threshold():
    tasks = fixture_tasks()
    snapshots = run_loop(
        lambda: run_curriculum(
            tasks, simulator(), ScriptedAgent(), None, batch_size=16, rollouts=2, steps=2, seed=7
        )
    )
    ids = sorted(task.task_id for task in tasks)
    assert [snapshot["step"] for snapshot in snapshots] == [1, 2]
    assert snapshots[0]["batch"] == ids
    assert snapshots[1]["active"] == ids
    assert snapshots[1]["last_mastered"] == len(ids)


def test_curriculum_removes_mastered_prompts():
    tasks = fixture_tasks()
    snapshots = run_loop(
        lambda: run_curriculum(
            tasks,
            simulator(),
            ScriptedAgent(),
            None,
            batch_size=2,
            rollouts=1,
            steps=5,
            seed=7,
            threshold=0,
        )
    )
    assert [len(snapshot["batch"]) for snapshot in snapshots] == [2, 1]
    assert snapshots[-1]["active"] == []
    assert sorted(snapshots[-1]["removed"].values()) == [1, 1, 2]


def test_curriculum_batches_are_seeded():
    tasks = fixture_tasks()

    def batches(seed: int) -> list[list[str]]:
        snapshots = run_loop(
            lambda: run_curriculum(
                tasks,
                simulator(),
                ScriptedAgent(1.0),
                None,
                batch_size=1,
                rollouts=1,
                steps=3,
                seed=seed,
            )
        )
        return [snapshot["batch"] for snapshot in snapshots]

    assert batches(7) == batches(7)
