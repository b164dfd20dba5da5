from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any, Iterable

from ..forge import TaskRecord
from ..judge import JudgeGateway
from ..runtime import LogContext, log, map_ordered
from ..simulator import Simulator, SimulatorBackend, TaskContext
from ._agents import Agent
from ._curriculum import DEFAULT_THRESHOLD, CurriculumState, filter_batch
from ._passk import RewardMatrix
from ._reward import reward


@dataclass
class RolloutResult:
    matrix: RewardMatrix
    rows: list[dict[str, Any]] = field(default_factory=list)
    """One ``{"task_id", "rollout_idx", "reward", "via"}`` row per rollout."""


async def run_rollouts(
    tasks: Iterable[TaskRecord],
    simulator: Simulator,
    agent: Agent,
    gateway: JudgeGateway | None,
    rollouts: int,
    *,
    jobs: int | None = None,
) -> RolloutResult:
    """Run ``rollouts`` attempts per task against the simulator and score each one.

    Every rollout gets its own backend whose task context names the task. Results are merged in
    task and rollout order.
    """
    ordered = sorted(tasks, key=lambda t: t.task_id)

    async def attempt(item: tuple[TaskRecord, int]) -> dict[str, Any]:
        task, index = item
        LogContext.scope = f"rollout:{task.task_id}:{index}"
        backend = SimulatorBackend(simulator, TaskContext(task.task_id))
        answer = await agent.solve(task, backend, index)
        outcome = await reward(task, answer, gateway)
        return {
            "task_id": task.task_id,
            "rollout_idx": index,
            "reward": outcome.reward,
            "via": outcome.via,
        }

    items = [(task, index) for task in ordered for index in range(rollouts)]
    rows = await map_ordered(attempt, items, jobs=jobs)
    return RolloutResult(RewardMatrix.from_rows(rows, rollouts), rows)


async def run_curriculum(
    tasks: Iterable[TaskRecord],
    simulator: Simulator,
    agent: Agent,
    gateway: JudgeGateway | None,
    *,
    batch_size: int,
    rollouts: int,
    steps: int,
    seed: int,
    threshold: int = DEFAULT_THRESHOLD,
    jobs: int | None = None,
) -> list[dict[str, Any]]:
    """Draw batches from the active prompts and filter mastered ones after each step.

    Returns one snapshot per step holding the batch, its rewards and the curriculum state.
    """
    by_id = {task.task_id: task for task in tasks}
    state = CurriculumState.start(by_id)
    snapshots = []
    for step in range(steps):
        if not state.active:
            log(f"no active prompts left after {step} steps")
            break
        rng = random.Random(f"{seed}:curriculum:{step}")
        batch_ids = sorted(rng.sample(sorted(state.active), min(batch_size, len(state.active))))
        result = await run_rollouts(
            [by_id[task_id] for task_id in batch_ids],
            simulator,
            agent,
            gateway,
            rollouts,
            jobs=jobs,
        )
        state = filter_batch(result.matrix.rewards, state, threshold=threshold, rollouts=rollouts)
        snapshots.append({"batch": batch_ids, "rewards": result.matrix.rewards, **state.to_json()})
    return snapshots
