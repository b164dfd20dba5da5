from __future__ import annotations

import asyncio
import json
from pathlib import Path

import httpx
import pytest
from mcp_forge.config import load_config
from mcp_forge.judge import (
    BackendUnreachable,
    HttpBackend,
    JudgeGateway,
    JudgeRequest,
    Role,
    SchemaViolation,
    StubBackend,
    StubRuleMissing,
    gateway_from_config,
    render_prompt,
)
from mcp_forge.runtime import run_loop

from tests.test_utils import FIXTURES, stub_gateway


class ScriptedBackend:
    """Returns the given texts in order, counting calls."""

    name = "scripted"

    def __init__(self, *texts: str):
        self.texts = list(texts)
        self.calls = 0

    async def generate(self, request: JudgeRequest) -> str:
        self.calls += 1
        await asyncio.sleep(0)
        return self.texts.pop(0)


def test_stub_then_cache():
    gateway = stub_gateway('answer_judge => {"equivalent": true}')

    async def main():
        request = JudgeRequest(Role.ANSWER_JUDGE, "same prompt")
        return await gateway.complete(request), await gateway.complete(request)

    first, second = run_loop(main)
    assert (first.backend, second.backend) == ("stub", "cache")
    assert first.value == second.value == {"equivalent": True}
    assert first.request_digest == second.request_digest
    assert gateway.backend_calls == 1
    assert gateway.calls_by_role == {"answer_judge": 1}


def test_digest_covers_temperature_and_role():
    base = JudgeRequest(Role.ANSWER_JUDGE, "p")
    assert base.digest == JudgeRequest(Role.ANSWER_JUDGE, "p", temperature=0.0).digest
    assert base.digest != JudgeRequest(Role.ANSWER_JUDGE, "p", temperature=0.5).digest
    assert base.digest != JudgeRequest(Role.EDGE_JUDGE, "p").digest
    with pytest.raises(ValueError):
        JudgeRequest(Role.ANSWER_JUDGE, "p", temperature=-1)


def test_missing_rule_propagates():
    gateway = stub_gateway('answer_judge => {"equivalent": true}')
    with pytest.raises(StubRuleMissing):
        run_loop(lambda: gateway.ask(Role.EDGE_JUDGE, "prompt"))


def test_retry_until_conforming():
    backend = ScriptedBackend("not json", '{"equivalent": "yes"}', '{"equivalent": false}')
    gateway = JudgeGateway(backend, retries=2)

    assert run_loop(lambda: gateway.ask(Role.ANSWER_JUDGE, "p")) == {"equivalent": False}
    assert backend.calls == 3


def test_retries_exhausted():
    backend = ScriptedBackend("[]", "[]")
    gateway = JudgeGateway(backend, retries=1)

    with pytest.raises(SchemaViolation, match="after 2 attempts"):
        run_loop(lambda: gateway.ask(Role.ANSWER_JUDGE, "p"))
    assert backend.calls == 2


def test_concurrent_requests_share_one_call():
    backend = ScriptedBackend('{"chainable": true, "confidence": "high"}')
    gateway = JudgeGateway(backend)

    async def main():
        return await asyncio.gather(*(gateway.ask(Role.EDGE_JUDGE, "p") for _ in range(4)))

    assert run_loop(main) == [{"chainable": True, "confidence": "high"}] * 4
    assert backend.calls == 1


def test_persistent_cache(tmp_path: Path):
    cache = tmp_path / "judge_cache.jsonl"
    backend = ScriptedBackend('{"equivalent": true}')
    run_loop(lambda: JudgeGateway(backend, cache_path=cache).ask(Role.ANSWER_JUDGE, "p"))

    record = json.loads(cache.read_text())
    assert record["role"] == "answer_judge"
    assert record["value"] == {"equivalent": True}

    reloaded = JudgeGateway(ScriptedBackend(), cache_path=cache)
    assert reloaded.cache_size == 1
    assert run_loop(lambda: reloaded.ask(Role.ANSWER_JUDGE, "p")) == {"equivalent": True}
    assert reloaded.backend_calls == 0


def test_http_backend(monkeypatch: pytest.MonkeyPatch):
    seen: list[httpx.Request] = []

    def handler(request: httpx.Request) -> httpx.Response:
        seen.append(request)
        content = json.dumps({"equivalent": True})
        return httpx.Response(200, json={"choices": [{"message": {"content": content}}]})

    monkeypatch.setenv("TEST_JUDGE_KEY", "secret")
    backend = HttpBackend(
        "https://judge.test/v1/chat",
        model="m",
        credential_env="TEST_JUDGE_KEY",
        transport=httpx.MockTransport(handler),
    )
    gateway = JudgeGateway(backend)

    assert run_loop(lambda: gateway.ask(Role.ANSWER_JUDGE, "prompt")) == {"equivalent": True}
    body = json.loads(seen[0].content)
    assert seen[0].headers["Authorization"] == "Bearer secret"
    assert body["model"] == "m"
    assert body["messages"] == [{"role": "user", "content": "prompt"}]
    assert body["response_format"]["json_schema"]["name"] == "answer_judge"


def test_http_backend_without_credential(monkeypatch: pytest.MonkeyPatch):
    monkeypatch.delenv("MCP_FORGE_JUDGE_KEY", raising=False)
    assert "Authorization" not in HttpBackend("https://judge.test").headers()


def test_http_error_status_not_retried():
    calls = 0

    def handler(request: httpx.Request) -> httpx.Response:
        nonlocal calls
        calls += 1
        return httpx.Response(503)

    gateway = JudgeGateway(
        HttpBackend("https://judge.test", transport=httpx.MockTransport(handler)), retries=3
    )
    with pytest.raises(BackendUnreachable, match="HTTP status 503"):
        run_loop(lambda: gateway.ask(Role.ANSWER_JUDGE, "p"))
    assert calls == 1


def test_http_malformed_body_is_retried():
    def handler(request: httpx.Request) -> httpx.Response:
        return httpx.Response(200, json={"unexpected": True})

    gateway = JudgeGateway(
        HttpBackend("https://judge.test", transport=httpx.MockTransport(handler)), retries=1
    )
    with pytest.raises(SchemaViolation):
        run_loop(lambda: gateway.ask(Role.ANSWER_JUDGE, "p"))
    assert gateway.backend_calls == 2


def test_gateway_from_fixture_config(tmp_path: Path):
    config = load_config(FIXTURES / "forge.cfg")
    config.gateway.cache = str(tmp_path / "cache.jsonl")
    gateway = gateway_from_config(config)

    assert isinstance(gateway.backend, StubBackend)
    assert gateway.retries == 3
    assert gateway.cache_path == tmp_path / "cache.jsonl"


def test_render_prompt_is_canonical():
    first = render_prompt(Role.ANSWER_JUDGE, task="t", fields={"b": 1, "a": 2})
    second = render_prompt(Role.ANSWER_JUDGE, task="t", fields={"a": 2, "b": 1})
    assert first == second
    assert '{"a":2,"b":1}' in first
