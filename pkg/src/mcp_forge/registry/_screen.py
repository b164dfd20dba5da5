from __future__ import annotations

import random
import re
from typing import Iterable

from ..judge import JudgeGateway, Role, marker, render_prompt
from ..runtime import LogContext, log, map_ordered
from ..schema_core import canonical_json
from ._records import CRITERIA, ScreeningVerdict, ServerRecord

_TRIVIAL_TOOL_RE = re.compile(
    r"(^|_)(echo|ping|health|healthcheck|version|debug|diagnostics?|test)($|_)"
)

METADATA_NOTE = "judged from metadata only; statelessness cannot be confirmed without probing"


def metadata_checks(record: ServerRecord) -> dict[str, tuple[bool, str]]:
    """Deterministic checks on server metadata, each ``(ok, reason)``."""
    checks: dict[str, tuple[bool, str]] = {}
    if record.connection.auth != "none":
        checks["no_user_auth"] = (False, f"connection declares `{record.connection.auth}` auth")
    undocumented = [
        f"{tool.tool_name}.{name}"
        for tool in record.tools
        for name in tool.undocumented_parameters()
    ]
    if undocumented:
        checks["schema_clear"] = (
            False,
            f"parameters lack a type or description: {', '.join(undocumented)}",
        )
    if record.tools and all(_TRIVIAL_TOOL_RE.search(t.tool_name.lower()) for t in record.tools):
        checks["nontrivial"] = (False, "only echo or diagnostic tools")
    return checks


def screen_prompt(record: ServerRecord) -> str:
    tools = "\n".join(
        f"{marker('tool', tool.ref)}\n"
        f"  description: {tool.description}\n"
        f"  input_schema: {canonical_json(tool.input_schema)}"
        for tool in sorted(record.tools, key=lambda t: t.ref)
    )
    return render_prompt(
        Role.SERVER_SCREEN,
        server=marker("server_id", record.server_id),
        display_name=record.display_name,
        connection=record.connection.to_json(),
        tools=tools,
    )


async def screen_server(record: ServerRecord, gateway: JudgeGateway) -> ScreeningVerdict:
    """Judge a server against the four screening criteria.

    The judged verdict is combined with deterministic metadata checks by conjunction, so a failed
    metadata check can only turn a criterion false.
    """
    judged = await gateway.ask(Role.SERVER_SCREEN, screen_prompt(record))
    rationale = {
        criterion: str(text) for criterion, text in (judged.get("rationale") or {}).items()
    }
    values = {criterion: bool(judged[criterion]) for criterion in CRITERIA}
    for criterion, (ok, reason) in metadata_checks(record).items():
        if not ok:
            values[criterion] = False
            rationale[criterion] = reason
    rationale["stateless"] = "; ".join(
        part for part in (rationale.get("stateless", ""), METADATA_NOTE) if part
    )
    return ScreeningVerdict(**values, rationale=rationale)


async def screen_all(
    records: Iterable[ServerRecord], gateway: JudgeGateway, *, jobs: int | None = None
) -> list[ServerRecord]:
    """Screen servers concurrently, returning them sorted by server id with verdicts attached."""

    async def screen(record: ServerRecord) -> ServerRecord:
        LogContext.scope = f"screen:{record.server_id}"
        record.verdict = await screen_server(record, gateway)
        log(f"{'pass' if record.verdict.passed else 'fail'}")
        return record

    ordered = sorted(records, key=lambda r: r.server_id)
    return await map_ordered(screen, ordered, jobs=jobs)


def funnel(scraped: int, with_tools: int, screened: Iterable[ServerRecord]) -> dict[str, int]:
    passed = sum(1 for record in screened if record.verdict and record.verdict.passed)
    return {"scraped": scraped, "with_tools": with_tools, "passed": passed}


def spot_check_sample(records: list[ServerRecord], n: int, seed: int) -> list[ServerRecord]:
    """Seeded sample of screened servers for manual review, in server id order."""
    rng = random.Random(f"{seed}:spot-check")
    ordered = sorted(records, key=lambda r: r.server_id)
    sample = rng.sample(ordered, min(n, len(ordered)))
    return sorted(sample, key=lambda r: r.server_id)
