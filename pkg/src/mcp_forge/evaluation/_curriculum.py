from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from ..errors import ForgeError, InputError
from ..runtime import log

DEFAULT_THRESHOLD = 10


class UnknownTask(ForgeError):
    """A batch holds rewards for a task that is not active."""


@dataclass(frozen=True)
class CurriculumState:
    active: frozenset[str]
    removed: Mapping[str, int] = field(default_factory=dict)
    """Removed task ids with the step that removed them. Removed tasks never return."""
    step: int = 0
    last_mastered: int = 0
    """How many prompts of the most recent batch were solved on every rollout."""

    @classmethod
    def start(cls, task_ids: Iterable[str]) -> CurriculumState:
        return cls(frozenset(task_ids))

    def to_json(self) -> dict[str, Any]:
        return {
            "step": self.step,
            "active": sorted(self.active),
            "removed": dict(sorted(self.removed.items())),
            "last_mastered": self.last_mastered,
        }


def filter_batch(
    batch: Mapping[str, Iterable[int]],
    state: CurriculumState,
    *,
    threshold: int = DEFAULT_THRESHOLD,
    rollouts: int | None = None,
) -> CurriculumState:
    """Apply one batch of rollout rewards to the curriculum.

    Prompts solved on every rollout count as mastered. Only when more than ``threshold`` of them
    occur in this batch are they all removed; otherwise nothing is removed. Prompts that always
    fail stay active.
    """
    mastered = []
    for task_id in sorted(batch):
        if task_id not in state.active:
            raise UnknownTask(f"task `{task_id}` is not active")
        vector = list(batch[task_id])
        if rollouts is not None and len(vector) != rollouts:
            raise InputError(task_id, f"expected {rollouts} rollouts, got {len(vector)}")
        if vector and all(value == 1 for value in vector):
            mastered.append(task_id)

    step = state.step + 1
    if len(mastered) <= threshold:
        return CurriculumState(state.active, state.removed, step, len(mastered))

    log(f"step {step}: removing {len(mastered)} mastered prompts")
    removed = dict(state.removed)
    removed.update((task_id, step) for task_id in mastered)
    return CurriculumState(state.active - set(mastered), removed, step, len(mastered))
