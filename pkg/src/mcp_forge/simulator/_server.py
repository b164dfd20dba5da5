"""MCP server facade over a `Simulator`.

Speaks JSON-RPC 2.0 with ``initialize``, ``ping``, ``tools/list`` and ``tools/call``, over
newline-delimited stdio or HTTP ``POST /mcp``. Two extensions carry the task a session works
on: the ``mcp-forge/setTaskContext`` method and a ``_meta`` field ``mcp-forge/taskId`` on
individual ``tools/call`` requests. Call results report how they were resolved in
``_meta["mcp-forge/tier"]`` and ``_meta["mcp-forge/provenance"]``.
"""

from __future__ import annotations

import asyncio
import itertools
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, TextIO

from aiohttp import web

from .. import __version__
from ..artifacts import append_jsonl
from ..explorer import PROTOCOL_VERSION
from ..runtime import LogContext, log, log_debug
from ..schema_core import (
    CanonicalizationError,
    MalformedSchema,
    ToolRef,
    canonical_json,
    canonicalize,
)
from ._simulator import Simulator, TaskContext

PARSE_ERROR = -32700
INVALID_REQUEST = -32600
METHOD_NOT_FOUND = -32601
INVALID_PARAMS = -32602

SERVER_NAME = "mcp-forge-simulator"
SESSION_HEADER = "Mcp-Session-Id"
SET_TASK_CONTEXT = "mcp-forge/setTaskContext"
TASK_ID_META = "mcp-forge/taskId"
TIER_META = "mcp-forge/tier"
PROVENANCE_META = "mcp-forge/provenance"


class RpcError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


@dataclass
class Session:
    session_id: str
    context: TaskContext = field(default_factory=TaskContext)
    initialized: bool = False


def rpc_error(request_id: Any, code: int, message: str) -> dict[str, Any]:
    return {"jsonrpc": "2.0", "id": request_id, "error": {"code": code, "message": message}}


def _unrepresentable(message: Any, exc: CanonicalizationError) -> dict[str, Any] | None:
    """Error reply for a frame that parses but holds values JSON cannot carry (NaN, lone
    surrogates). Notifications still get no reply."""
    if not isinstance(message, dict) or not isinstance(message.get("method"), str):
        return rpc_error(None, INVALID_REQUEST, f"not a JSON-RPC 2.0 request: {exc}")
    if "id" not in message:
        return None
    try:
        request_id = canonicalize(message["id"])
    except CanonicalizationError:
        request_id = None
    return rpc_error(request_id, INVALID_PARAMS, str(exc))


def _printable(text: str) -> str:
    return text.encode("utf-8", "surrogatepass").decode("utf-8", "replace")


def _task_context(task_id: Any) -> TaskContext:
    if task_id is not None and not isinstance(task_id, str):
        raise RpcError(INVALID_PARAMS, "taskId must be a string or null")
    return TaskContext(task_id)


class McpServer:
    def __init__(self, simulator: Simulator, *, transcript: str | Path | None = None):
        self.simulator = simulator
        self.transcript = Path(transcript) if transcript else None
        self.sessions: dict[str, Session] = {}
        self._session_ids = itertools.count(1)

    def new_session(self) -> Session:
        session = Session(f"session-{next(self._session_ids)}")
        self.sessions[session.session_id] = session
        return session

    def _record(self, session: Session, direction: str, frame: Any) -> None:
        if self.transcript is not None:
            append_jsonl(
                self.transcript,
                {"session": session.session_id, "direction": direction, "frame": frame},
            )

    async def handle_frame(self, text: str, session: Session) -> str | None:
        """Handle one serialized frame, returning the serialized response if one is due."""
        try:
            message = json.loads(text)
        except json.JSONDecodeError as exc:
            self._record(session, "in", _printable(text))
            response: dict[str, Any] | None = rpc_error(None, PARSE_ERROR, f"parse error: {exc}")
        else:
            try:
                message = canonicalize(message)
            except CanonicalizationError as exc:
                self._record(session, "in", _printable(text))
                response = _unrepresentable(message, exc)
            else:
                self._record(session, "in", message)
                response = await self.handle_message(message, session)
        if response is None:
            return None
        self._record(session, "out", response)
        return canonical_json(response)

    async def handle_message(self, message: Any, session: Session) -> dict[str, Any] | None:
        if isinstance(message, list):
            return rpc_error(None, INVALID_REQUEST, "batch requests are not supported")
        if (
            not isinstance(message, dict)
            or message.get("jsonrpc") != "2.0"
            or not isinstance(message.get("method"), str)
        ):
            request_id = message.get("id") if isinstance(message, dict) else None
            return rpc_error(request_id, INVALID_REQUEST, "not a JSON-RPC 2.0 request")

        method = message["method"]
        notification = "id" not in message
        request_id = message.get("id")
        params = message.get("params", {})
        if params is None:
            params = {}

        if notification:
            if method == "notifications/initialized":
                session.initialized = True
            else:
                log_debug(f"ignoring notification `{method}`")
            return None

        try:
            if not isinstance(params, dict):
                raise RpcError(INVALID_PARAMS, "params must be an object")
            result = await self.dispatch(method, params, session)
        except RpcError as exc:
            return rpc_error(request_id, exc.code, exc.message)
        return {"jsonrpc": "2.0", "id": request_id, "result": result}

    async def dispatch(self, method: str, params: dict[str, Any], session: Session) -> Any:
        if method == "initialize":
            return {
                "protocolVersion": PROTOCOL_VERSION,
                "capabilities": {"tools": {"listChanged": False}},
                "serverInfo": {"name": SERVER_NAME, "version": __version__},
            }
        if method == "ping":
            return {}
        if method == "tools/list":
            return {
                "tools": [
                    {
                        "name": str(spec.ref),
                        "description": spec.description,
                        "inputSchema": spec.input_schema,
                    }
                    for spec in self.simulator.tool_specs
                ]
            }
        if method == "tools/call":
            return await self.call_tool(params, session)
        if method == SET_TASK_CONTEXT:
            session.context = _task_context(params.get("taskId"))
            return {"taskId": session.context.task_id}
        raise RpcError(METHOD_NOT_FOUND, f"method not found: {method}")

    def tool_ref(self, name: Any) -> ToolRef:
        """Resolve a tool name, qualified as ``server_id/tool_name`` or bare when unique."""
        if not isinstance(name, str) or not name:
            raise RpcError(INVALID_PARAMS, "tools/call requires a tool name")
        if "/" in name:
            try:
                return ToolRef.parse(name)
            except MalformedSchema as exc:
                raise RpcError(INVALID_PARAMS, str(exc)) from None
        matches = [ref for ref in sorted(self.simulator.index.tool_specs) if ref.tool_name == name]
        if len(matches) != 1:
            problem = "is ambiguous" if matches else "is unknown"
            raise RpcError(INVALID_PARAMS, f"tool name `{name}` {problem}, use server_id/tool_name")
        return matches[0]

    async def call_tool(self, params: dict[str, Any], session: Session) -> dict[str, Any]:
        tool = self.tool_ref(params.get("name"))
        arguments = params.get("arguments", {})
        if arguments is None:
            arguments = {}
        if not isinstance(arguments, dict):
            raise RpcError(INVALID_PARAMS, "arguments must be an object")
        context = session.context
        meta = params.get("_meta")
        if isinstance(meta, dict) and TASK_ID_META in meta:
            context = _task_context(meta[TASK_ID_META])
        try:
            response = await self.simulator.resolve(tool, arguments, context)
        except (CanonicalizationError, MalformedSchema) as exc:
            raise RpcError(INVALID_PARAMS, str(exc)) from None
        return {
            "content": [{"type": "text", "text": canonical_json(response.output)}],
            "isError": response.is_error,
            "_meta": {TIER_META: response.tier.value, PROVENANCE_META: response.provenance},
        }


async def serve_stdio(
    server: McpServer, reader: TextIO | None = None, writer: TextIO | None = None
) -> None:
    """Serve one session over newline-delimited frames until ``reader`` reaches end of file."""
    reader = reader or sys.stdin
    writer = writer or sys.stdout
    session = server.new_session()
    LogContext.scope = f"simulate:{session.session_id}"
    while True:
        line = await asyncio.to_thread(reader.readline)
        if not line:
            break
        if not line.strip():
            continue
        response = await server.handle_frame(line.strip(), session)
        if response is not None:
            writer.write(response + "\n")
            writer.flush()
    log_debug(f"{session.session_id} closed")


def _is_initialize(text: str) -> bool:
    try:
        message = json.loads(text)
    except json.JSONDecodeError:
        return False
    return isinstance(message, dict) and message.get("method") == "initialize"


def http_app(server: McpServer) -> web.Application:
    """An aiohttp application serving ``POST /mcp``.

    ``initialize`` starts a session whose id is returned in the ``Mcp-Session-Id`` header;
    later requests carrying that header share its task context. Other requests without a known
    session id share one default session.
    """
    shared: Session | None = None

    def session_for(request: web.Request, text: str) -> Session:
        nonlocal shared
        session = server.sessions.get(request.headers.get(SESSION_HEADER, ""))
        if session is not None:
            return session
        if _is_initialize(text):
            return server.new_session()
        if shared is None:
            shared = server.new_session()
        return shared

    async def handle(request: web.Request) -> web.Response:
        text = await request.text()
        session = session_for(request, text)
        LogContext.scope = f"simulate:{session.session_id}"
        response = await server.handle_frame(text, session)
        headers = {SESSION_HEADER: session.session_id}
        if response is None:
            return web.Response(status=202, headers=headers)
        return web.Response(text=response, content_type="application/json", headers=headers)

    app = web.Application()
    app.router.add_post("/mcp", handle)
    return app


async def serve_http(server: McpServer, host: str, port: int) -> None:
    """Serve over HTTP until cancelled."""
    runner = web.AppRunner(http_app(server))
    await runner.setup()
    try:
        site = web.TCPSite(runner, host, port)
        await site.start()
        log(f"serving {len(server.simulator.tool_specs)} tools on http://{host}:{port}/mcp")
        await asyncio.Event().wait()
    finally:
        await runner.cleanup()
