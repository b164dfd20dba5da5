from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from typing import Any, Iterable, Mapping

from ..forge import TaskRecord
from ..judge import JudgeError, JudgeGateway, Role, marker, render_prompt
from ..runtime import log_warning
from ..schema_core import canonical_json


def normalize_answer(value: Any) -> str:
    text = value if isinstance(value, str) else canonical_json(value)
    return unicodedata.normalize("NFC", text.strip())


def match_answer(schema: Iterable[str], truth: Mapping[str, Any], candidate: Any) -> bool:
    """Field-level exact match: every schema key present and equal after trimming and NFC
    normalization. Extra candidate keys are ignored and comparison is case sensitive."""
    if not isinstance(candidate, Mapping):
        return False
    for key in schema:
        if key not in candidate:
            return False
        if normalize_answer(candidate[key]) != normalize_answer(truth[key]):
            return False
    return True


@dataclass(frozen=True)
class RewardOutcome:
    reward: int
    via: str
    """``exact``, ``judge``, ``judge_error`` or ``none``."""

    @property
    def flagged(self) -> bool:
        return self.via == "judge_error"


def _is_empty(answer: Any) -> bool:
    if answer is None:
        return True
    if isinstance(answer, str):
        return not answer.strip()
    if isinstance(answer, Mapping):
        return all(_is_empty(value) for value in answer.values())
    return False


def answer_judge_prompt(task: TaskRecord, candidate: Any) -> str:
    if isinstance(candidate, Mapping):
        lines = [
            f"{key}: expected {canonical_json(task.ground_truth[key])}, "
            f"candidate {canonical_json(candidate.get(key))}"
            for key in task.fields
        ]
    else:
        lines = [
            f"expected: {canonical_json(task.ground_truth)}",
            f"candidate: {canonical_json(candidate)}",
        ]
    return render_prompt(
        Role.ANSWER_JUDGE, task=marker("task_id", task.task_id), fields="\n".join(lines)
    )


async def reward(
    task: TaskRecord, final_answer: Any, gateway: JudgeGateway | None
) -> RewardOutcome:
    """Binary reward: exact field match first, the semantic judge only when that fails.

    A judge failure gives reward 0.
    """
    if match_answer(task.fields, task.ground_truth, final_answer):
        return RewardOutcome(1, "exact")
    if gateway is None or _is_empty(final_answer):
        return RewardOutcome(0, "none")
    try:
        verdict = await gateway.ask(Role.ANSWER_JUDGE, answer_judge_prompt(task, final_answer))
    except JudgeError as exc:
        log_warning(f"{task.task_id}: answer judge failed, rewarding 0: {exc}")
        return RewardOutcome(0, "judge_error")
    return RewardOutcome(1 if verdict["equivalent"] else 0, "judge")
