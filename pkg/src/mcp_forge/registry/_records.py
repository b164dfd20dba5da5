from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from ..artifacts import read_jsonl, write_jsonl
from ..errors import InputError
from ..schema_core import MalformedSchema, ToolSpec, parse_tool_spec

SERVERS_KIND = "servers"
CRITERIA = ("stateless", "no_user_auth", "schema_clear", "nontrivial")


@dataclass(frozen=True)
class Connection:
    transport: str = "http"
    """``http`` or ``stdio``."""
    endpoint: str = ""
    auth: str = "none"
    """Declared authentication, anything but ``none`` needs user credentials."""

    def to_json(self) -> dict[str, Any]:
        return {"transport": self.transport, "endpoint": self.endpoint, "auth": self.auth}


@dataclass
class ScreeningVerdict:
    stateless: bool
    no_user_auth: bool
    schema_clear: bool
    nontrivial: bool
    rationale: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.stateless and self.no_user_auth and self.schema_clear and self.nontrivial

    def to_json(self) -> dict[str, Any]:
        return {
            **{criterion: getattr(self, criterion) for criterion in CRITERIA},
            "pass": self.passed,
            "rationale": dict(sorted(self.rationale.items())),
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> ScreeningVerdict:
        return cls(
            *(bool(data[criterion]) for criterion in CRITERIA),
            rationale=dict(data.get("rationale", {})),
        )


@dataclass
class ServerRecord:
    server_id: str
    display_name: str
    connection: Connection
    tools: list[ToolSpec]
    provenance: str = "fixture"
    """``registry`` or ``fixture``."""
    description: str = ""
    verdict: ScreeningVerdict | None = None

    def to_json(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "server_id": self.server_id,
            "display_name": self.display_name,
            "description": self.description,
            "connection": self.connection.to_json(),
            "provenance": self.provenance,
            "tools": [tool.to_json() for tool in self.tools],
        }
        if self.verdict is not None:
            data["verdict"] = self.verdict.to_json()
        return data


def parse_server(data: Any, where: str, provenance: str = "fixture") -> ServerRecord:
    """Build a `ServerRecord` from a server document.

    Tool documents may use the normalized layout or the MCP ``tools/list`` layout.
    """
    if not isinstance(data, dict):
        raise InputError(where, "server document must be a JSON object")
    server_id = data.get("server_id")
    if not isinstance(server_id, str) or not server_id:
        raise InputError(where, "server document lacks a server_id")
    connection = data.get("connection") or {}
    if not isinstance(connection, dict):
        raise InputError(where, f"server `{server_id}`: connection must be an object")
    tools = []
    for i, raw in enumerate(data.get("tools") or []):
        try:
            tools.append(parse_tool_spec(raw, server_id=server_id))
        except MalformedSchema as exc:
            raise InputError(where, f"server `{server_id}`, tool {i}: {exc}") from None
    verdict = data.get("verdict")
    return ServerRecord(
        server_id=server_id,
        display_name=str(data.get("display_name") or server_id),
        description=str(data.get("description") or ""),
        connection=Connection(
            transport=str(connection.get("transport", "http")),
            endpoint=str(connection.get("endpoint", "")),
            auth=str(connection.get("auth") or "none"),
        ),
        tools=tools,
        provenance=str(data.get("provenance", provenance)),
        verdict=ScreeningVerdict.from_json(verdict) if isinstance(verdict, dict) else None,
    )


def save_servers(path: str | Path, records: Iterable[ServerRecord], **header: Any) -> int:
    return write_jsonl(path, SERVERS_KIND, (record.to_json() for record in records), **header)


def load_servers(path: str | Path) -> list[ServerRecord]:
    _, records = read_jsonl(path, SERVERS_KIND)
    return [parse_server(data, f"{path}:{i + 2}") for i, data in enumerate(records)]
