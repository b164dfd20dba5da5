from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable

import httpx

from ..errors import ForgeError, InputError
from ..runtime import log_debug
from ._records import ServerRecord, parse_server


class SourceUnreachable(ForgeError):
    """The registry endpoint or fixture directory cannot be read."""


def matches_query(record: ServerRecord, query: str) -> bool:
    """Whether a server is returned for a registry query.

    An empty query is a broad listing, ``prefix:<p>`` enumerates server ids starting with ``p`` and
    any other query is a case-insensitive keyword search over names and descriptions.
    """
    if not query:
        return True
    if query.startswith("prefix:"):
        return record.server_id.startswith(query[len("prefix:") :])
    keyword = query.lower()
    haystack = [record.server_id, record.display_name, record.description]
    for tool in record.tools:
        haystack += [tool.tool_name, tool.description]
    return any(keyword in text.lower() for text in haystack)


def load_fixture_dir(directory: Path) -> list[ServerRecord]:
    """Read every ``*.json`` (one server) and ``*.jsonl`` (one server per line) document, in file
    name order."""
    if not directory.is_dir():
        raise SourceUnreachable(f"fixture directory `{directory}` not found")
    records = []
    for path in sorted(directory.iterdir()):
        if path.suffix == ".json":
            try:
                data = json.loads(path.read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}:{exc.lineno}", f"invalid JSON: {exc.msg}") from None
            records.append(parse_server(data, str(path)))
        elif path.suffix == ".jsonl":
            for number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
                if not line.strip():
                    continue
                try:
                    data = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise InputError(f"{path}:{number}", f"invalid JSON: {exc.msg}") from None
                records.append(parse_server(data, f"{path}:{number}"))
    return records


async def fetch_registry(
    url: str, query: str, *, transport: httpx.AsyncBaseTransport | None = None
) -> list[ServerRecord]:
    """Run one query against a live registry, following pagination.

    ``GET <url>/servers?q=<query>&page=<n>`` answers ``{"servers": [...], "next_page": n | null}``.
    """
    records = []
    page: Any = 1
    async with httpx.AsyncClient(timeout=30.0, transport=transport) as client:
        while page is not None:
            try:
                response = await client.get(
                    f"{url.rstrip('/')}/servers", params={"q": query, "page": page}
                )
                response.raise_for_status()
                data = response.json()
            except (httpx.HTTPError, ValueError) as exc:
                raise SourceUnreachable(f"{url}: {exc}") from exc
            for i, server in enumerate(data.get("servers", [])):
                records.append(parse_server(server, f"{url} page {page} entry {i}", "registry"))
            page = data.get("next_page")
            log_debug(f"registry query {query!r}: {len(records)} servers so far")
    return records


async def list_servers(
    source: str | Path,
    queries: Iterable[str],
    *,
    transport: httpx.AsyncBaseTransport | None = None,
) -> list[ServerRecord]:
    """Union of the results of all queries, in query order and before deduplication."""
    queries = list(queries)
    if not queries:
        return []
    text = str(source)
    if text.startswith(("http://", "https://")):
        results = []
        for query in queries:
            results += await fetch_registry(text, query, transport=transport)
        return results
    fixtures = load_fixture_dir(Path(source))
    return [record for query in queries for record in fixtures if matches_query(record, query)]


def dedup_servers(records: Iterable[ServerRecord]) -> list[ServerRecord]:
    """Keep the first record per server id and drop servers exposing no tools."""
    seen: set[str] = set()
    result = []
    for record in records:
        if record.server_id in seen:
            continue
        seen.add(record.server_id)
        if record.tools:
            result.append(record)
    return result
