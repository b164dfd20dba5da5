from __future__ import annotations

import json
from collections import Counter
from pathlib import Path
from typing import Any, Protocol

from ..artifacts import append_jsonl, iter_json_lines
from ..config import PipelineConfig
from ..errors import InputError
from ..runtime import SingleFlight, log_debug, log_warning
from ._http import HttpBackend
from ._request import JudgeRequest, JudgeResponse, Role, SchemaViolation, schema_errors
from ._stub import StubBackend, load_rules


class Backend(Protocol):
    name: str

    async def generate(self, request: JudgeRequest) -> str:
        """Return the raw text produced for a request."""
        ...


class JudgeGateway:
    """Single entry point for every LLM-backed decision.

    Responses are validated against the request's response schema, retried a bounded number of
    times when they do not conform, and cached by request digest. The cache is kept in memory and,
    when ``cache_path`` is given, in an append-only JSONL file of ``{"request_digest", "role",
    "value"}`` records that is loaded again on construction.
    """

    def __init__(self, backend: Backend, *, retries: int = 3, cache_path: str | Path | None = None):
        self.backend = backend
        self.retries = retries
        self.cache_path = Path(cache_path) if cache_path else None
        self.backend_calls = 0
        self.calls_by_role: Counter[str] = Counter()
        self._cache: dict[str, Any] = {}
        self._flight: SingleFlight[str, JudgeResponse] = SingleFlight()
        if self.cache_path is not None and self.cache_path.exists():
            self._load_cache(self.cache_path)

    def _load_cache(self, path: Path) -> None:
        for number, record in iter_json_lines(path):
            try:
                self._cache[record["request_digest"]] = record["value"]
            except (KeyError, TypeError):
                raise InputError(f"{path}:{number}", "malformed judge cache record") from None
        log_debug(f"loaded {len(self._cache)} cached judge responses from {path}")

    @property
    def cache_size(self) -> int:
        return len(self._cache)

    async def complete(self, request: JudgeRequest) -> JudgeResponse:
        digest = request.digest
        if digest in self._cache:
            return JudgeResponse(self._cache[digest], "cache", digest)
        return await self._flight.run(digest, lambda: self._resolve(request, digest))

    async def _resolve(self, request: JudgeRequest, digest: str) -> JudgeResponse:
        if digest in self._cache:
            return JudgeResponse(self._cache[digest], "cache", digest)

        problem = ""
        for attempt in range(1 + self.retries):
            self.backend_calls += 1
            self.calls_by_role[request.role.value] += 1
            text = await self.backend.generate(request)
            try:
                value = json.loads(text)
            except json.JSONDecodeError:
                problem = "output is not JSON"
            else:
                if not (errors := schema_errors(request.response_schema, value)):
                    break
                problem = errors[0]
            log_warning(f"{request.role} response rejected (attempt {attempt + 1}): {problem}")
        else:
            raise SchemaViolation(
                f"{request.role}: no conforming output after {1 + self.retries} attempts: "
                f"{problem}"
            )

        response = JudgeResponse(value, self.backend.name, digest)
        self._cache[digest] = response.value
        if self.cache_path is not None:
            append_jsonl(
                self.cache_path,
                {"request_digest": digest, "role": request.role.value, "value": response.value},
            )
        return response

    async def ask(self, role: Role, prompt: str, *, temperature: float = 0.0) -> Any:
        """Complete a request using the role's standard response schema and return its value."""
        response = await self.complete(JudgeRequest(role, prompt, temperature=temperature))
        return response.value


def gateway_from_config(config: PipelineConfig) -> JudgeGateway:
    """Build the gateway selected by the ``[gateway]`` section."""
    options = config.gateway
    backend: Backend
    if options.mode == "stub":
        backend = StubBackend(load_rules(config.path(options.rules)))
    else:
        backend = HttpBackend(
            options.endpoint,
            model=options.model,
            credential_env=options.credential_env,
            timeout=options.timeout,
        )
    cache = config.path(options.cache) if options.cache else None
    return JudgeGateway(backend, retries=options.retries, cache_path=cache)
