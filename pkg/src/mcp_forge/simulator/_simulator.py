from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

from ..artifacts import read_jsonl, write_jsonl
from ..errors import InputError
from ..explorer import CallResult, error_payload
from ..judge import JudgeError, JudgeGateway, Role, marker, render_prompt
from ..runtime import SingleFlight, log_debug, log_warning
from ..schema_core import ToolRef, ToolSpec, canonical_json, canonicalize
from ._index import CallIndex, ToolCallRecord, call_digest, rank_similar

GENERATED_DAG = "generated"
OVERLAY_KIND = "overlay"


class Tier(str, Enum):
    EXACT = "exact"
    FUZZY = "fuzzy"
    NO_DATA = "no_data"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SimResponse:
    output: Any
    tier: Tier
    provenance: str
    """Id of the record that answered, ``generated:<digest>`` for overlay records."""
    flagged: bool = False
    """The fuzzy tier could not produce an output; ``output`` is an error payload."""

    @property
    def is_error(self) -> bool:
        return self.tier is Tier.NO_DATA or self.flagged


@dataclass
class TierCounters:
    exact: int = 0
    fuzzy: int = 0
    no_data: int = 0

    def record(self, tier: Tier) -> None:
        setattr(self, tier.value, getattr(self, tier.value) + 1)

    @property
    def total(self) -> int:
        return self.exact + self.fuzzy + self.no_data

    def as_dict(self) -> dict[str, Any]:
        total = self.total
        return {
            "exact": self.exact,
            "fuzzy": self.fuzzy,
            "no_data": self.no_data,
            "total": total,
            "shares": {
                tier.value: round(getattr(self, tier.value) / total, 6) if total else 0.0
                for tier in Tier
            },
        }


@dataclass(frozen=True)
class TaskContext:
    """Which task a session is working on, so its ground-truth calls are preferred."""

    task_id: str | None = None


def no_data_payload(tool: ToolRef) -> dict[str, Any]:
    return error_payload("no_data", f"no recorded calls exist for tool `{tool}`")


def fuzzy_prompt(tool: ToolRef, args: Any, examples: list[ToolCallRecord]) -> str:
    return render_prompt(
        Role.FUZZY_GENERATOR,
        tool=marker("tool", tool),
        query_args=args,
        examples="\n".join(
            f"[{i}] args: {canonical_json(record.args)}\n    output: "
            f"{canonical_json(record.output)}"
            for i, record in enumerate(examples)
        ),
    )


class Simulator:
    """Three-tier resolution of tool calls against a `CallIndex`.

    Calls are answered from the recorded index or the generated overlay when their digest is
    known, from a judge-generated output conditioned on the ``top_k`` most similar recorded calls
    of the same tool otherwise, and with a ``no_data`` error when the tool has no recordings.
    Generated outputs are written through to the overlay, and saved to ``overlay_path`` when
    given, so repeating a call always gives the same response.
    """

    def __init__(
        self,
        index: CallIndex,
        gateway: JudgeGateway | None = None,
        *,
        overlay_path: str | Path | None = None,
    ):
        self.index = index
        self.gateway = gateway
        self.overlay_path = Path(overlay_path) if overlay_path else None
        self.counters = TierCounters()
        self._flight: SingleFlight[str, SimResponse] = SingleFlight()
        if self.overlay_path is not None and self.overlay_path.exists():
            self._load_overlay(self.overlay_path)

    def _load_overlay(self, path: Path) -> None:
        _, lines = read_jsonl(path, OVERLAY_KIND)
        for i, line in enumerate(lines):
            try:
                record = ToolCallRecord.from_json(line)
            except (KeyError, TypeError, ValueError):
                raise InputError(f"{path}:{i + 2}", "malformed overlay record") from None
            if record.digest not in self.index.exact:
                self.index.generated.setdefault(record.digest, record)
        log_debug(f"loaded {len(self.index.generated)} generated responses from {path}")

    def save_overlay(self, path: str | Path) -> int:
        """Write every generated record, ordered by digest."""
        records = [self.index.generated[digest] for digest in sorted(self.index.generated)]
        return write_jsonl(path, OVERLAY_KIND, (record.to_json() for record in records))

    @property
    def tool_specs(self) -> list[ToolSpec]:
        return [self.index.tool_specs[ref] for ref in sorted(self.index.tool_specs)]

    async def resolve(
        self, tool: ToolRef, args: Any, ctx: TaskContext | None = None
    ) -> SimResponse:
        args = canonicalize(args)
        response = await self._resolve(tool, args, ctx or TaskContext())
        self.counters.record(response.tier)
        log_debug(f"{tool} resolved at tier {response.tier} ({response.provenance})")
        return response

    async def _resolve(self, tool: ToolRef, args: Any, ctx: TaskContext) -> SimResponse:
        digest = call_digest(tool, args)
        if (record := self.index.lookup(digest)) is not None:
            return SimResponse(record.output, Tier.EXACT, record.record_id)
        if not self.index.by_tool.get(tool):
            return SimResponse(no_data_payload(tool), Tier.NO_DATA, "none")

        # The first caller generates; concurrent identical calls share its answer.
        return await self._flight.run(digest, lambda: self._generate(tool, args, digest, ctx))

    async def _generate(
        self, tool: ToolRef, args: Any, digest: str, ctx: TaskContext
    ) -> SimResponse:
        if (record := self.index.generated.get(digest)) is not None:
            return SimResponse(record.output, Tier.EXACT, record.record_id)

        examples = rank_similar(
            self.index, tool, args, self.index.top_k, self.index.ground_truth_ids(ctx.task_id)
        )
        record_id = f"{GENERATED_DAG}:{digest[:12]}"
        if self.gateway is None:
            return self._failed(tool, record_id, "no judge gateway configured")
        try:
            prompt = fuzzy_prompt(tool, args, examples)
            decision = await self.gateway.ask(Role.FUZZY_GENERATOR, prompt)
        except JudgeError as exc:
            return self._failed(tool, record_id, str(exc))

        choice = decision.get("choice")
        if isinstance(choice, int) and 0 <= choice < len(examples):
            output = examples[choice].output
            log_debug(f"{tool}: reusing the output of {examples[choice].record_id}")
        else:
            output = decision.get("output")

        record = ToolCallRecord(record_id, GENERATED_DAG, 0, tool, args, output)
        self.index.generated[digest] = record
        if self.overlay_path is not None:
            self.save_overlay(self.overlay_path)
        return SimResponse(record.output, Tier.FUZZY, record_id)

    def _failed(self, tool: ToolRef, record_id: str, problem: str) -> SimResponse:
        log_warning(f"fuzzy generation for {tool} failed: {problem}")
        return SimResponse(
            error_payload("generation_failed", f"could not simulate `{tool}`: {problem}"),
            Tier.FUZZY,
            record_id,
            flagged=True,
        )


@dataclass
class SimulatorBackend:
    """In-process `ToolBackend` that answers calls through a `Simulator`."""

    simulator: Simulator
    context: TaskContext = field(default_factory=TaskContext)

    async def call(self, tool: ToolRef, args: Any) -> CallResult:
        response = await self.simulator.resolve(tool, args, self.context)
        return CallResult(
            response.output,
            response.is_error,
            {"tier": response.tier.value, "provenance": response.provenance},
        )

    async def list_tools(self) -> list[ToolSpec]:
        return self.simulator.tool_specs
