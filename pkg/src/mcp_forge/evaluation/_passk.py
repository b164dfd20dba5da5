from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Any, Iterable, Mapping

from ..errors import ForgeError, InputError


class KOutOfRange(ForgeError):
    """``k`` is not between 1 and the number of rollouts."""


@dataclass
class RewardMatrix:
    """Binary rewards of ``n`` rollouts per task."""

    n: int
    rewards: dict[str, list[int]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for task_id, vector in self.rewards.items():
            self._check(task_id, vector)

    def _check(self, task_id: str, vector: list[int]) -> None:
        if len(vector) != self.n:
            raise InputError(task_id, f"expected {self.n} rewards, got {len(vector)}")
        if any(value not in (0, 1) for value in vector):
            raise InputError(task_id, "rewards must be 0 or 1")

    def add(self, task_id: str, vector: Iterable[int]) -> None:
        vector = list(vector)
        self._check(task_id, vector)
        self.rewards[task_id] = vector

    def successes(self, task_id: str) -> int:
        return sum(self.rewards[task_id])

    @classmethod
    def from_rows(cls, rows: Iterable[Mapping[str, Any]], n: int) -> RewardMatrix:
        """Assemble a matrix from ``{"task_id", "rollout_idx", "reward"}`` rows."""
        vectors: dict[str, list[int]] = {}
        for row in rows:
            vector = vectors.setdefault(str(row["task_id"]), [0] * n)
            vector[int(row["rollout_idx"])] = int(row["reward"])
        return cls(n, dict(sorted(vectors.items())))


def estimate_pass_at_k(n: int, c: int, k: int) -> float:
    """``1 - C(n-c, k) / C(n, k)``, computed exactly before rounding to a float."""
    if not 1 <= k <= n:
        raise KOutOfRange(f"k must be between 1 and {n}, got {k}")
    if n - c < k:
        return 1.0
    return float(1 - Fraction(comb(n - c, k), comb(n, k)))


@dataclass(frozen=True)
class PassAtK:
    k: int
    per_task: dict[str, float]

    @property
    def mean(self) -> float:
        if not self.per_task:
            return 0.0
        return float(sum(Fraction(v) for v in self.per_task.values()) / len(self.per_task))


def pass_at_k(matrix: RewardMatrix, k: int) -> PassAtK:
    if not 1 <= k <= matrix.n:
        raise KOutOfRange(f"k must be between 1 and {matrix.n}, got {k}")
    return PassAtK(
        k,
        {
            task_id: estimate_pass_at_k(matrix.n, matrix.successes(task_id), k)
            for task_id in sorted(matrix.rewards)
        },
    )


def passk_report(matrix: RewardMatrix, ks: Iterable[int]) -> dict[str, Any]:
    results = [pass_at_k(matrix, k) for k in ks]
    return {
        "rollouts": matrix.n,
        "task_count": len(matrix.rewards),
        "mean": {f"pass@{result.k}": result.mean for result in results},
        "per_task": {
            task_id: {f"pass@{result.k}": result.per_task[task_id] for result in results}
            for task_id in sorted(matrix.rewards)
        },
    }
