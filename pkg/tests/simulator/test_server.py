from __future__ import annotations

import io
import json
from pathlib import Path
from typing import Any

import pytest
from aiohttp.test_utils import TestClient, TestServer
from mcp_forge.artifacts import iter_json_lines
from mcp_forge.explorer import PROTOCOL_VERSION, McpHttpBackend
from mcp_forge.runtime import run_loop
from mcp_forge.schema_core import ToolRef, canonical_json
from mcp_forge.simulator import (
    INVALID_PARAMS,
    INVALID_REQUEST,
    METHOD_NOT_FOUND,
    PARSE_ERROR,
    PROVENANCE_META,
    SESSION_HEADER,
    SET_TASK_CONTEXT,
    TASK_ID_META,
    TIER_META,
    McpServer,
    Simulator,
    http_app,
    load_cassette,
    serve_stdio,
)

from tests.test_utils import FIXTURES, fixture_gateway


def make_server(**kwargs: Any) -> McpServer:
    index = load_cassette(FIXTURES / "recordings.jsonl")
    index.task_records["whois-task"] = ["recordings:1"]
    return McpServer(Simulator(index, fixture_gateway()), **kwargs)


def request(method: str, params: Any = None, request_id: int = 1) -> str:
    frame: dict[str, Any] = {"jsonrpc": "2.0", "id": request_id, "method": method}
    if params is not None:
        frame["params"] = params
    return json.dumps(frame)


def exchange(server: McpServer, *frames: str) -> list[Any]:
    async def main():
        session = server.new_session()
        replies = [await server.handle_frame(frame, session) for frame in frames]
        return [None if reply is None else json.loads(reply) for reply in replies]

    return run_loop(main)


def call(name: str, arguments: Any, **extra: Any) -> str:
    return request("tools/call", {"name": name, "arguments": arguments, **extra})


NAN_CALL = (
    '{"jsonrpc": "2.0", "id": 9, "method": "tools/call", '
    '"params": {"name": "whois_lookup", "arguments": {"x": NaN}}}'
)


def test_initialize_and_list():
    init, listed = exchange(make_server(), request("initialize", {}), request("tools/list", {}, 2))
    assert init["result"]["protocolVersion"] == PROTOCOL_VERSION
    assert init["result"]["capabilities"] == {"tools": {"listChanged": False}}
    assert listed["id"] == 2
    names = [tool["name"] for tool in listed["result"]["tools"]]
    assert len(names) == 9
    assert names == sorted(names)
    assert "networkcalc-mcp/whois_lookup" in names


def test_tools_call():
    frame = call("networkcalc-mcp/whois_lookup", {"domain": "amazon.com"})
    [reply] = exchange(make_server(), frame)
    result = reply["result"]
    assert result["isError"] is False
    assert json.loads(result["content"][0]["text"])["creation_date"] == "1994-11-01T05:00:00Z"
    assert result["_meta"] == {TIER_META: "exact", PROVENANCE_META: "recordings:0"}


def test_bare_tool_name():
    [reply] = exchange(make_server(), call("whois_lookup", {"domain": "amazon.com"}))
    assert reply["result"]["_meta"][PROVENANCE_META] == "recordings:0"


def test_unknown_tool_has_no_data():
    [reply] = exchange(make_server(), call("weather-mcp/forecast", {"city": "Oslo"}))
    assert reply["result"]["isError"] is True
    assert reply["result"]["_meta"][TIER_META] == "no_data"


def test_task_context():
    domain = {"domain": "amazon.co.uk"}
    plain, context, in_context, by_meta = exchange(
        make_server(),
        call("networkcalc-mcp/whois_lookup", domain),
        request(SET_TASK_CONTEXT, {"taskId": "whois-task"}),
        call("networkcalc-mcp/whois_lookup", {"domain": "amazon.org"}),
        call("networkcalc-mcp/whois_lookup", {"domain": "amazon.net"}, _meta={TASK_ID_META: None}),
    )
    text = [json.loads(r["result"]["content"][0]["text"]) for r in (plain, in_context, by_meta)]
    assert context["result"] == {"taskId": "whois-task"}
    assert [output["domain"] for output in text] == ["amazon.com", "netflix.com", "amazon.com"]


@pytest.mark.parametrize(
    "frame, code, request_id",
    [
        ("{not json", PARSE_ERROR, None),
        ("[]", INVALID_REQUEST, None),
        ('{"jsonrpc": "1.0", "id": 4, "method": "ping"}', INVALID_REQUEST, 4),
        ('{"jsonrpc": "2.0", "id": 5}', INVALID_REQUEST, 5),
        (request("resources/list", {}, 6), METHOD_NOT_FOUND, 6),
        (request("tools/call", [1], 7), INVALID_PARAMS, 7),
        (request("tools/call", {}, 8), INVALID_PARAMS, 8),
        (call("geo-mcp/", {}), INVALID_PARAMS, 1),
        (call("no_such_tool", {}), INVALID_PARAMS, 1),
        (call("whois_lookup", [1]), INVALID_PARAMS, 1),
        (NAN_CALL, INVALID_PARAMS, 9),
        (request(SET_TASK_CONTEXT, {"taskId": 3}), INVALID_PARAMS, 1),
    ],
)
def test_errors(frame, code, request_id):
    [reply] = exchange(make_server(), frame)
    assert reply["jsonrpc"] == "2.0"
    assert reply["id"] == request_id
    assert reply["error"]["code"] == code


def test_notifications_get_no_reply():
    server = make_server()
    replies = exchange(
        server,
        '{"jsonrpc": "2.0", "method": "notifications/initialized"}',
        '{"jsonrpc": "2.0", "method": "notifications/cancelled", "params": {}}',
        request("ping"),
    )
    assert replies == [None, None, {"jsonrpc": "2.0", "id": 1, "result": {}}]
    assert server.sessions["session-1"].initialized


def test_transcript(tmp_path: Path):
    transcript = tmp_path / "transcript.jsonl"
    exchange(make_server(transcript=transcript), request("ping"), "oops")
    entries = [entry for _, entry in iter_json_lines(transcript)]
    assert [(e["direction"], e["session"]) for e in entries] == [
        ("in", "session-1"),
        ("out", "session-1"),
        ("in", "session-1"),
        ("out", "session-1"),
    ]
    assert entries[2]["frame"] == "oops"
    assert entries[3]["frame"]["error"]["code"] == PARSE_ERROR


def test_stdio():
    reader = io.StringIO(
        request("initialize", {})
        + "\n\n"
        + '{"jsonrpc": "2.0", "method": "notifications/initialized"}\n'
        + call("geo-mcp/country_info", {"country_code": "US"})
        + "\n"
    )
    writer = io.StringIO()
    run_loop(lambda: serve_stdio(make_server(), reader, writer))

    replies = [json.loads(line) for line in writer.getvalue().splitlines()]
    assert len(replies) == 2
    assert replies[0]["result"]["serverInfo"]["name"] == "mcp-forge-simulator"
    assert json.loads(replies[1]["result"]["content"][0]["text"])["currency"] == "USD"


def test_http():
    server = make_server()

    async def main():
        async with TestClient(TestServer(http_app(server))) as client:
            init = await client.post("/mcp", data=request("initialize", {}))
            session_id = init.headers[SESSION_HEADER]
            headers = {SESSION_HEADER: session_id}
            notified = await client.post(
                "/mcp",
                data='{"jsonrpc": "2.0", "method": "notifications/initialized"}',
                headers=headers,
            )
            await client.post(
                "/mcp", data=request(SET_TASK_CONTEXT, {"taskId": "whois-task"}), headers=headers
            )
            called = await client.post(
                "/mcp",
                data=call("networkcalc-mcp/whois_lookup", {"domain": "amazon.io"}),
                headers=headers,
            )
            fresh = await client.post(
                "/mcp", data=call("networkcalc-mcp/whois_lookup", {"domain": "amazon.io"})
            )
            return (
                session_id,
                notified.status,
                await called.json(),
                fresh.headers[SESSION_HEADER],
                await fresh.json(),
            )

    session_id, notified, called, fresh_id, fresh = run_loop(main)
    assert session_id == "session-1"
    assert notified == 202
    assert server.sessions[session_id].initialized
    assert json.loads(called["result"]["content"][0]["text"])["domain"] == "netflix.com"
    assert fresh_id == "session-2"
    # repeated calls hit the overlay in any session
    assert fresh["result"]["_meta"][TIER_META] == "exact"


SURROGATE_CALL = (
    '{"jsonrpc": "2.0", "id": 2, "method": "tools/call", '
    '"params": {"name": "whois_lookup", "arguments": {"domain": "\\ud800"}}}'
)
LIST_TASK_CALL = call(
    "networkcalc-mcp/whois_lookup", {"domain": "amazon.com"}, _meta={TASK_ID_META: ["x"]}
)


def test_stdio_survives_unrepresentable_frames(tmp_path: Path):
    transcript = tmp_path / "transcript.jsonl"
    reader = io.StringIO(
        "\n".join([NAN_CALL, SURROGATE_CALL, LIST_TASK_CALL, request("ping", request_id=10)])
        + "\n"
    )
    writer = io.StringIO()
    run_loop(lambda: serve_stdio(make_server(transcript=transcript), reader, writer))

    replies = [json.loads(line) for line in writer.getvalue().splitlines()]
    assert [(reply["id"], reply["error"]["code"]) for reply in replies[:3]] == [
        (9, INVALID_PARAMS),
        (2, INVALID_PARAMS),
        (1, INVALID_PARAMS),
    ]
    assert replies[3] == {"jsonrpc": "2.0", "id": 10, "result": {}}

    entries = [entry for _, entry in iter_json_lines(transcript)]
    assert len(entries) == 8
    assert isinstance(entries[0]["frame"], str)
    assert entries[2]["frame"] == SURROGATE_CALL


def test_unrepresentable_notification_gets_no_reply():
    frame = '{"jsonrpc": "2.0", "method": "notifications/cancelled", "params": {"x": NaN}}'
    assert exchange(make_server(), frame, request("ping")) == [
        None,
        {"jsonrpc": "2.0", "id": 1, "result": {}},
    ]


def test_http_headerless_requests_share_session():
    server = make_server()

    async def main():
        async with TestClient(TestServer(http_app(server))) as client:
            ids = []
            for request_id in range(5):
                reply = await client.post("/mcp", data=request("ping", request_id=request_id))
                ids.append(reply.headers[SESSION_HEADER])
            unknown = await client.post(
                "/mcp", data=request("ping"), headers={SESSION_HEADER: "session-99"}
            )
            init = await client.post("/mcp", data=request("initialize", {}))
            return ids, unknown.headers[SESSION_HEADER], init.headers[SESSION_HEADER]

    ids, unknown_id, init_id = run_loop(main)
    assert ids == ["session-1"] * 5
    assert unknown_id == "session-1"
    assert init_id == "session-2"
    assert sorted(server.sessions) == ["session-1", "session-2"]


SERVED_CALLS = [
    (ToolRef("networkcalc-mcp", "whois_lookup"), {"domain": "amazon.com"}),
    (ToolRef("networkcalc-mcp", "whois_lookup"), {"domain": "netflix.com"}),
    (ToolRef("networkcalc-mcp", "whois_lookup"), {"domain": "hulu.com"}),
    (ToolRef("networkcalc-mcp", "dns_lookup"), {"domain": "example.com"}),
    (ToolRef("networkcalc-mcp", "dns_lookup"), {"domain": "example.org"}),
    (ToolRef("geo-mcp", "ip_geolocate"), {"ip": "93.184.216.34"}),
    (ToolRef("geo-mcp", "ip_geolocate"), {"ip": "1.1.1.1"}),
    (ToolRef("geo-mcp", "country_info"), {"country_code": "US"}),
    (ToolRef("geo-mcp", "country_info"), {"country_code": "DE"}),
    (ToolRef("weather-mcp", "current_weather"), {"city": "Norwell"}),
    (ToolRef("weather-mcp", "current_weather"), {"city": "Oslo"}),
    (ToolRef("weather-mcp", "forecast"), {"city": "Oslo"}),
    (ToolRef("wiki-mcp", "search_articles"), {"query": "model context protocol"}),
    (ToolRef("wiki-mcp", "article_summary"), {"title": "Model Context Protocol"}),
    (ToolRef("wiki-mcp", "article_summary"), {"title": "JSON-RPC"}),
    (ToolRef("wiki-mcp", "page_views"), {"title": "Model Context Protocol", "days": 30}),
    (ToolRef("finance-mcp", "exchange_rate"), {"base": "USD", "quote": "EUR"}),
    (ToolRef("finance-mcp", "exchange_rate"), {"base": "GBP", "quote": "JPY"}),
    (ToolRef("geo-mcp", "country_info"), {"country_code": "DE"}),
    (ToolRef("weather-mcp", "current_weather"), {"city": "Oslo"}),
]


def test_http_backend_matches_in_process_resolve():
    server = make_server()

    async def served():
        async with TestServer(http_app(server)) as http:
            url = str(http.make_url("/mcp"))
            endpoints = {tool.server_id: url for tool, _ in SERVED_CALLS}
            async with McpHttpBackend(endpoints, qualified=True) as backend:
                results = [await backend.call(tool, args) for tool, args in SERVED_CALLS]
        return [
            (canonical_json(r.output), r.is_error, r.meta[TIER_META], r.meta[PROVENANCE_META])
            for r in results
        ]

    async def in_process():
        simulator = Simulator(load_cassette(FIXTURES / "recordings.jsonl"), fixture_gateway())
        responses = [await simulator.resolve(tool, args) for tool, args in SERVED_CALLS]
        return [
            (canonical_json(r.output), r.is_error, r.tier.value, r.provenance) for r in responses
        ]

    over_http = run_loop(served)
    assert over_http == run_loop(in_process)
    assert {tier for _, _, tier, _ in over_http} == {"exact", "fuzzy", "no_data"}
    assert over_http[-1][2] == "exact"


def served_frames() -> list[str]:
    frames = [request("initialize", {}), request("tools/list", {}, 2)]
    for i in range(48):
        tool, args = SERVED_CALLS[i % len(SERVED_CALLS)]
        if i % 7 == 3:
            frames.append(request(SET_TASK_CONTEXT, {"taskId": "whois-task" if i % 2 else None}))
        elif i % 11 == 5:
            frames.append(call(str(tool), {"x": i}))
        else:
            frames.append(call(str(tool), args))
    return frames


def test_served_transcript_is_deterministic(tmp_path: Path):
    frames = served_frames()
    assert len(frames) == 50
    first, second = tmp_path / "first.jsonl", tmp_path / "second.jsonl"
    exchange(make_server(transcript=first), *frames)
    exchange(make_server(transcript=second), *frames)

    assert first.read_bytes() == second.read_bytes()
    assert len(list(iter_json_lines(first))) == 100
