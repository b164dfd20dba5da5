from __future__ import annotations

import asyncio
import json
from pathlib import Path

from mcp_forge.runtime import run_loop
from mcp_forge.schema_core import ToolRef
from mcp_forge.simulator import (
    Simulator,
    SimulatorBackend,
    TaskContext,
    Tier,
    TierCounters,
    load_cassette,
)

from tests.test_utils import FIXTURES, fixture_gateway, stub_gateway

WHOIS = ToolRef("networkcalc-mcp", "whois_lookup")
FORECAST = ToolRef("weather-mcp", "forecast")


def recorded_calls() -> list[tuple[ToolRef, dict]]:
    index = load_cassette(FIXTURES / "recordings.jsonl")
    return [(record.tool, record.args) for record in index.exact.values()]


def simulator(**kwargs) -> Simulator:
    return Simulator(load_cassette(FIXTURES / "recordings.jsonl"), fixture_gateway(), **kwargs)


def test_tiers():
    sim = simulator()
    calls = (
        recorded_calls()
        + [(WHOIS, {"domain": f"site{i}.com"}) for i in range(10)]
        + [(FORECAST, {"city": f"city{i}"}) for i in range(10)]
    )

    async def main():
        first = [await sim.resolve(tool, args) for tool, args in calls]
        after_first = sim.counters.as_dict()
        second = [await sim.resolve(tool, args) for tool, args in calls]
        return first, after_first, second

    first, after_first, second = run_loop(main)

    assert [r.tier for r in first] == [Tier.EXACT] * 10 + [Tier.FUZZY] * 10 + [Tier.NO_DATA] * 10
    assert after_first["exact"] == after_first["fuzzy"] == after_first["no_data"] == 10
    assert [r.tier for r in second] == [Tier.EXACT] * 20 + [Tier.NO_DATA] * 10
    assert [r.output for r in second] == [r.output for r in first]
    assert sim.counters == TierCounters(exact=30, fuzzy=10, no_data=20)
    assert first[0].provenance == "recordings:0"
    assert first[10].provenance.startswith("generated:")
    assert second[10].provenance == first[10].provenance
    assert first[20].is_error
    assert first[20].output["error"]["code"] == "no_data"


def test_fuzzy_reuses_most_similar_output():
    sim = simulator()
    response = run_loop(lambda: sim.resolve(WHOIS, {"domain": "amazon.co.uk"}))
    assert response.tier is Tier.FUZZY
    assert response.output["domain"] == "amazon.com"
    assert not response.is_error


def test_ground_truth_records_are_preferred():
    index = load_cassette(FIXTURES / "recordings.jsonl")
    index.task_records["t"] = ["recordings:1"]
    sim = Simulator(index, fixture_gateway())

    response = run_loop(lambda: sim.resolve(WHOIS, {"domain": "amazon.co.uk"}, TaskContext("t")))
    assert response.output["domain"] == "netflix.com"


def test_generated_output():
    gateway = stub_gateway('fuzzy_generator => {"choice": null, "output": {"domain": "made.up"}}')
    sim = Simulator(load_cassette(FIXTURES / "recordings.jsonl"), gateway)
    response = run_loop(lambda: sim.resolve(WHOIS, {"domain": "made.up"}))
    assert response.output == {"domain": "made.up"}


def test_generation_without_gateway_is_flagged():
    sim = Simulator(load_cassette(FIXTURES / "recordings.jsonl"))
    response = run_loop(lambda: sim.resolve(WHOIS, {"domain": "x.org"}))
    assert response.tier is Tier.FUZZY
    assert response.flagged
    assert response.is_error
    assert response.output["error"]["code"] == "generation_failed"
    assert sim.index.generated == {}


def test_concurrent_identical_calls_generate_once():
    sim = simulator()

    async def main():
        return await asyncio.gather(*(sim.resolve(WHOIS, {"domain": "same.org"}) for _ in range(5)))

    responses = run_loop(main)
    assert len({r.provenance for r in responses}) == 1
    assert len(sim.index.generated) == 1


def test_overlay_persists(tmp_path: Path):
    overlay = tmp_path / "overlay.jsonl"
    first = simulator(overlay_path=overlay)
    generated = run_loop(lambda: first.resolve(WHOIS, {"domain": "site.org"}))
    assert overlay.exists()

    second = Simulator(load_cassette(FIXTURES / "recordings.jsonl"), overlay_path=overlay)
    replayed = run_loop(lambda: second.resolve(WHOIS, {"domain": "site.org"}))
    assert replayed.tier is Tier.EXACT
    assert replayed.output == generated.output
    assert replayed.provenance == generated.provenance


def test_overlay_is_sorted_by_digest(tmp_path: Path):
    sim = simulator()

    async def main():
        for domain in ("c.org", "a.org", "b.org"):
            await sim.resolve(WHOIS, {"domain": domain})

    run_loop(main)
    sim.save_overlay(tmp_path / "one.jsonl")
    sim.save_overlay(tmp_path / "two.jsonl")
    lines = (tmp_path / "one.jsonl").read_text().splitlines()[1:]
    digests = [json.loads(line)["digest"] for line in lines]
    assert len(digests) == 3
    assert digests == sorted(digests)
    assert (tmp_path / "one.jsonl").read_bytes() == (tmp_path / "two.jsonl").read_bytes()


def test_tier_shares():
    counters = TierCounters(exact=3, fuzzy=1, no_data=0)
    assert counters.as_dict() == {
        "exact": 3,
        "fuzzy": 1,
        "no_data": 0,
        "total": 4,
        "shares": {"exact": 0.75, "fuzzy": 0.25, "no_data": 0.0},
    }
    assert TierCounters().as_dict()["shares"] == {"exact": 0.0, "fuzzy": 0.0, "no_data": 0.0}


def test_backend_reports_tier():
    backend = SimulatorBackend(simulator())

    async def main():
        return await backend.call(WHOIS, {"domain": "amazon.com"}), await backend.list_tools()

    result, specs = run_loop(main)
    assert result.meta == {"tier": "exact", "provenance": "recordings:0"}
    assert len(specs) == 9
