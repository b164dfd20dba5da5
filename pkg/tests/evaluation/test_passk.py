from __future__ import annotations

import itertools
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st
from mcp_forge.errors import InputError
from mcp_forge.evaluation import (
    KOutOfRange,
    RewardMatrix,
    estimate_pass_at_k,
    pass_at_k,
    passk_report,
)


def brute_force(n: int, c: int, k: int) -> Fraction:
    """Share of the k-subsets of n rollouts, c of them successful, with at least one success."""
    rollouts = [1] * c + [0] * (n - c)
    subsets = list(itertools.combinations(rollouts, k))
    return Fraction(sum(1 for subset in subsets if any(subset)), len(subsets))


@pytest.mark.parametrize("n", range(1, 9))
def test_matches_brute_force(n):
    for c in range(n + 1):
        for k in range(1, n + 1):
            assert estimate_pass_at_k(n, c, k) == float(brute_force(n, c, k))


def test_known_values():
    assert estimate_pass_at_k(16, 4, 4) == pytest.approx(0.72802, abs=1e-5)
    assert estimate_pass_at_k(16, 4, 1) == 0.25
    assert estimate_pass_at_k(16, 0, 16) == 0.0
    assert estimate_pass_at_k(16, 13, 4) == 1.0
    assert estimate_pass_at_k(1, 1, 1) == 1.0


@given(st.integers(1, 40).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, n))))
def test_monotone(nc):
    n, c = nc
    values = [estimate_pass_at_k(n, c, k) for k in range(1, n + 1)]
    assert values == sorted(values)
    assert values[0] == pytest.approx(c / n)
    if c < n:
        more = [estimate_pass_at_k(n, c + 1, k) for k in range(1, n + 1)]
        assert all(a >= b for a, b in zip(more, values))


@pytest.mark.parametrize("k", [0, 5, -1])
def test_k_out_of_range(k):
    with pytest.raises(KOutOfRange):
        estimate_pass_at_k(4, 2, k)
    with pytest.raises(KOutOfRange):
        pass_at_k(RewardMatrix(4, {"t": [1, 0, 0, 1]}), k)


def test_matrix_checks():
    with pytest.raises(InputError, match="expected 4 rewards, got 3"):
        RewardMatrix(4, {"t": [1, 0, 1]})
    matrix = RewardMatrix(2)
    with pytest.raises(InputError, match="must be 0 or 1"):
        matrix.add("t", [1, 2])


def test_matrix_from_rows():
    rows = [
        {"task_id": "b", "rollout_idx": 1, "reward": 1},
        {"task_id": "a", "rollout_idx": 0, "reward": 1},
        {"task_id": "b", "rollout_idx": 0, "reward": 0},
    ]
    matrix = RewardMatrix.from_rows(rows, 2)
    assert matrix.rewards == {"a": [1, 0], "b": [0, 1]}
    assert list(matrix.rewards) == ["a", "b"]


def test_report():
    matrix = RewardMatrix(4, {"easy": [1, 1, 1, 1], "hard": [0, 0, 1, 0], "none": [0, 0, 0, 0]})
    report = passk_report(matrix, [1, 4])
    assert report["rollouts"] == 4
    assert report["task_count"] == 3
    assert report["per_task"]["hard"] == {"pass@1": 0.25, "pass@4": 1.0}
    assert report["mean"]["pass@1"] == pytest.approx(5 / 12)
    assert report["mean"]["pass@4"] == pytest.approx(2 / 3)
    assert pass_at_k(RewardMatrix(4), 2).mean == 0.0
