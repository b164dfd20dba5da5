from __future__ import annotations

import dataclasses

import pytest
from mcp_forge.evaluation import RewardOutcome, match_answer, normalize_answer, reward
from mcp_forge.forge import synthesize_tasks
from mcp_forge.runtime import run_loop

from tests.test_utils import fixture_gateway, stub_gateway, whois_dag

TRUTH = {
    "amazon_registration_year": "1994",
    "first_registered_domain": "amazon.com",
    "netflix_registration_year": "1997",
    "years_apart": "3",
}


@pytest.fixture
def whois_task():
    [task] = run_loop(lambda: synthesize_tasks(whois_dag(), fixture_gateway(), 1))
    return task


def score(task, answer, gateway) -> RewardOutcome:
    return run_loop(lambda: reward(task, answer, gateway))


def test_normalize_answer():
    assert normalize_answer("  Norwell\n") == "Norwell"
    assert normalize_answer("Cafe\u0301") == "Caf\u00e9"
    assert normalize_answer(3) == "3"
    assert normalize_answer(18.50) == "18.5"


def test_match_answer():
    schema = ["a", "b"]
    truth = {"a": "x", "b": "1"}
    assert match_answer(schema, truth, {"a": " x ", "b": 1, "extra": "ignored"})
    assert not match_answer(schema, truth, {"a": "X", "b": "1"})
    assert not match_answer(schema, truth, {"a": "x"})
    assert not match_answer(schema, truth, "x 1")


def test_exact(whois_task):
    assert score(whois_task, dict(TRUTH), fixture_gateway()) == RewardOutcome(1, "exact")
    assert score(whois_task, dict(TRUTH), None) == RewardOutcome(1, "exact")


def test_judge_accepts_equivalent(whois_task):
    answer = {**TRUTH, "years_apart": "three"}
    assert score(whois_task, answer, fixture_gateway()) == RewardOutcome(1, "judge")


def test_judge_rejects(whois_task):
    answer = {**TRUTH, "years_apart": "4"}
    assert score(whois_task, answer, fixture_gateway()) == RewardOutcome(0, "judge")
    assert score(whois_task, answer, None) == RewardOutcome(0, "none")


@pytest.mark.parametrize("answer", [None, "", "   ", {}, {"years_apart": " "}])
def test_empty_answers(whois_task, answer):
    assert score(whois_task, answer, fixture_gateway()) == RewardOutcome(0, "none")


def test_empty_truth_matches_exactly(whois_task):
    task = dataclasses.replace(
        whois_task, answer_schema={"note": {"type": "string"}}, ground_truth={"note": ""}
    )
    gateway = fixture_gateway()
    assert score(task, {"note": ""}, gateway) == RewardOutcome(1, "exact")
    assert score(task, {"note": "  "}, gateway) == RewardOutcome(1, "exact")
    assert score(task, None, gateway) == RewardOutcome(0, "none")
    assert gateway.calls_by_role["answer_judge"] == 0


def test_judge_failure(whois_task):
    gateway = stub_gateway('edge_judge => {"chainable": false}')
    outcome = score(whois_task, {**TRUTH, "years_apart": "three"}, gateway)
    assert outcome == RewardOutcome(0, "judge_error")
    assert outcome.flagged
