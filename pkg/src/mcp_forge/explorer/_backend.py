from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Mapping, Protocol

import httpx

from ..errors import ForgeError
from ..runtime import log_debug
from ..schema_core import ToolRef, ToolSpec, parse_tool_spec

PROTOCOL_VERSION = "2024-11-05"


class BackendError(ForgeError):
    """A call could not be delivered to the tool backend."""


@dataclass(frozen=True)
class CallResult:
    output: Any
    is_error: bool = False
    meta: Mapping[str, Any] = field(default_factory=dict)


class ToolBackend(Protocol):
    """Anything tool calls can be executed against: a live MCP client or the simulator."""

    async def call(self, tool: ToolRef, args: Any) -> CallResult:
        """Execute a call, raising `BackendError` when it cannot be delivered."""
        ...

    async def list_tools(self) -> list[ToolSpec]:
        ...


def error_payload(code: str, message: str) -> dict[str, Any]:
    return {"error": {"code": code, "message": message}}


def decode_content(result: Mapping[str, Any]) -> Any:
    """The value carried by an MCP ``tools/call`` result: JSON when the text parses, else text."""
    texts = [
        item.get("text", "")
        for item in result.get("content", [])
        if isinstance(item, dict) and item.get("type") == "text"
    ]
    text = "".join(texts)
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


class McpHttpBackend:
    """Minimal MCP client over HTTP.

    ``endpoints`` maps server ids to their MCP URL. With ``qualified`` tool names are sent as
    ``server_id/tool_name``, as expected by the simulator's server; live servers get bare names.
    """

    def __init__(
        self,
        endpoints: Mapping[str, str],
        *,
        qualified: bool = False,
        timeout: float = 30.0,
        transport: httpx.AsyncBaseTransport | None = None,
    ):
        self.endpoints = dict(endpoints)
        self.qualified = qualified
        self._client = httpx.AsyncClient(timeout=timeout, transport=transport)
        self._sessions: dict[str, str | None] = {}
        self._next_id = 0

    async def aclose(self) -> None:
        await self._client.aclose()

    async def __aenter__(self) -> McpHttpBackend:
        return self

    async def __aexit__(self, *exc: object) -> None:
        await self.aclose()

    def _endpoint(self, server_id: str) -> str:
        try:
            return self.endpoints[server_id]
        except KeyError:
            raise BackendError(f"no endpoint for server `{server_id}`") from None

    async def _post(self, server_id: str, method: str, params: Any, notify: bool = False) -> Any:
        url = self._endpoint(server_id)
        frame: dict[str, Any] = {"jsonrpc": "2.0", "method": method, "params": params}
        if not notify:
            self._next_id += 1
            frame["id"] = self._next_id
        headers = {"Accept": "application/json"}
        if session := self._sessions.get(server_id):
            headers["Mcp-Session-Id"] = session
        log_debug(f"MCP {method} -> {url}")
        try:
            response = await self._client.post(url, json=frame, headers=headers)
        except httpx.HTTPError as exc:
            raise BackendError(f"{url}: {type(exc).__name__}: {exc}") from exc
        if notify:
            return None
        if response.status_code >= 400:
            raise BackendError(f"{url}: HTTP status {response.status_code}")
        if session := response.headers.get("Mcp-Session-Id"):
            self._sessions[server_id] = session
        try:
            reply = response.json()
        except ValueError:
            raise BackendError(f"{url}: response is not JSON") from None
        if "error" in reply:
            error = reply["error"]
            message = f"{error.get('message')} ({error.get('code')})"
            raise BackendError(f"{url}: {method} failed: {message}")
        return reply.get("result")

    async def _ensure_session(self, server_id: str) -> None:
        if server_id in self._sessions:
            return
        self._sessions[server_id] = None
        await self._post(
            server_id,
            "initialize",
            {
                "protocolVersion": PROTOCOL_VERSION,
                "capabilities": {},
                "clientInfo": {"name": "mcp-forge", "version": "0"},
            },
        )
        await self._post(server_id, "notifications/initialized", {}, notify=True)

    async def call(self, tool: ToolRef, args: Any) -> CallResult:
        await self._ensure_session(tool.server_id)
        name = str(tool) if self.qualified else tool.tool_name
        result = await self._post(tool.server_id, "tools/call", {"name": name, "arguments": args})
        if not isinstance(result, dict):
            raise BackendError(f"{tool}: malformed tools/call result")
        value = decode_content(result)
        meta = result.get("_meta") or {}
        if result.get("isError"):
            if not (isinstance(value, dict) and "error" in value):
                value = error_payload("tool_error", str(value))
            return CallResult(value, True, meta)
        return CallResult(value, False, meta)

    async def list_tools(self) -> list[ToolSpec]:
        specs: dict[ToolRef, ToolSpec] = {}
        for server_id in sorted(self.endpoints):
            await self._ensure_session(server_id)
            result = await self._post(server_id, "tools/list", {})
            for tool in (result or {}).get("tools", []):
                if self.qualified:
                    ref = ToolRef.parse(tool["name"])
                    tool = {**tool, "name": ref.tool_name, "server_id": ref.server_id}
                spec = parse_tool_spec(tool, server_id=server_id)
                specs.setdefault(spec.ref, spec)
        return [specs[ref] for ref in sorted(specs)]
