from __future__ import annotations

import json
from typing import Any

import httpx
import pytest
from mcp_forge.explorer import BackendError, McpHttpBackend, decode_content
from mcp_forge.runtime import run_loop
from mcp_forge.schema_core import ToolRef

GEO = ToolRef("geo-mcp", "ip_geolocate")


class FakeServer:
    def __init__(self, *, fail_status: int | None = None):
        self.frames: list[dict[str, Any]] = []
        self.session_headers: list[str | None] = []
        self.fail_status = fail_status

    def __call__(self, request: httpx.Request) -> httpx.Response:
        frame = json.loads(request.content)
        self.frames.append(frame)
        self.session_headers.append(request.headers.get("Mcp-Session-Id"))
        if self.fail_status is not None:
            return httpx.Response(self.fail_status)
        method = frame["method"]
        if "id" not in frame:
            return httpx.Response(202)
        if method == "initialize":
            result: Any = {"protocolVersion": "2024-11-05", "capabilities": {"tools": {}}}
            return httpx.Response(
                200,
                json={"jsonrpc": "2.0", "id": frame["id"], "result": result},
                headers={"Mcp-Session-Id": "s-1"},
            )
        if method == "tools/list":
            result = {
                "tools": [
                    {
                        "name": "geo-mcp/ip_geolocate",
                        "description": "Locate an IP.",
                        "inputSchema": {"type": "object", "properties": {"ip": {"type": "string"}}},
                    }
                ]
            }
        elif frame["params"]["arguments"].get("ip") == "bad":
            result = {
                "content": [{"type": "text", "text": "invalid address"}],
                "isError": True,
            }
        else:
            result = {
                "content": [{"type": "text", "text": '{"country_code": "US"}'}],
                "_meta": {"tier": "exact"},
            }
        return httpx.Response(200, json={"jsonrpc": "2.0", "id": frame["id"], "result": result})


def client(server: FakeServer, **kwargs: Any) -> McpHttpBackend:
    return McpHttpBackend(
        {"geo-mcp": "http://sim.test/mcp"}, transport=httpx.MockTransport(server), **kwargs
    )


def test_call_opens_session_once():
    server = FakeServer()

    async def main():
        async with client(server, qualified=True) as backend:
            first = await backend.call(GEO, {"ip": "1.2.3.4"})
            second = await backend.call(GEO, {"ip": "1.2.3.4"})
        return first, second

    first, second = run_loop(main)

    assert first.output == {"country_code": "US"}
    assert not first.is_error
    assert first.meta == {"tier": "exact"}
    assert second == first
    assert [frame["method"] for frame in server.frames] == [
        "initialize",
        "notifications/initialized",
        "tools/call",
        "tools/call",
    ]
    assert server.frames[2]["params"]["name"] == "geo-mcp/ip_geolocate"
    assert server.session_headers == [None, "s-1", "s-1", "s-1"]


def test_bare_tool_names():
    server = FakeServer()

    async def main():
        async with client(server) as backend:
            await backend.call(GEO, {"ip": "1.2.3.4"})

    run_loop(main)
    assert server.frames[-1]["params"]["name"] == "ip_geolocate"


def test_tool_error_result():
    async def main():
        async with client(FakeServer()) as backend:
            return await backend.call(GEO, {"ip": "bad"})

    result = run_loop(main)
    assert result.is_error
    assert result.output == {"error": {"code": "tool_error", "message": "invalid address"}}


def test_http_failure():
    async def main():
        async with client(FakeServer(fail_status=500)) as backend:
            await backend.call(GEO, {"ip": "1.2.3.4"})

    with pytest.raises(BackendError, match="HTTP status 500"):
        run_loop(main)


def test_unknown_server():
    async def main():
        async with client(FakeServer()) as backend:
            await backend.call(ToolRef("other", "tool"), {})

    with pytest.raises(BackendError, match="no endpoint for server `other`"):
        run_loop(main)


def test_list_tools_qualified():
    async def main():
        async with client(FakeServer(), qualified=True) as backend:
            return await backend.list_tools()

    specs = run_loop(main)
    assert [spec.ref for spec in specs] == [GEO]


def test_decode_content():
    assert decode_content({"content": [{"type": "text", "text": "[1, 2]"}]}) == [1, 2]
    assert decode_content({"content": [{"type": "text", "text": "plain"}]}) == "plain"
    assert decode_content({"content": [{"type": "image", "data": "..."}]}) == ""
