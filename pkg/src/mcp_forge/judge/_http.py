from __future__ import annotations

import os
from typing import Any

import httpx

from ..runtime import log_debug
from ._request import BackendUnreachable, JudgeRequest


class HttpBackend:
    """Chat-completion style JSON-over-HTTP backend.

    The request body is ``{"model", "temperature", "messages": [{"role": "user", "content":
    prompt}], "response_format": {"type": "json_schema", "json_schema": {"name": role, "schema":
    response_schema}}}``; the answer is read from ``choices[0].message.content``. The credential
    is sent as a bearer token and only ever read from the environment.
    """

    name = "http"

    def __init__(
        self,
        endpoint: str,
        *,
        model: str = "judge",
        credential_env: str = "MCP_FORGE_JUDGE_KEY",
        timeout: float = 60.0,
        transport: httpx.AsyncBaseTransport | None = None,
    ):
        self.endpoint = endpoint
        self.model = model
        self.credential_env = credential_env
        self.timeout = timeout
        self.transport = transport

    def request_body(self, request: JudgeRequest) -> dict[str, Any]:
        return {
            "model": self.model,
            "temperature": request.temperature,
            "messages": [{"role": "user", "content": request.prompt}],
            "response_format": {
                "type": "json_schema",
                "json_schema": {"name": request.role.value, "schema": request.response_schema},
            },
        }

    def headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if credential := os.environ.get(self.credential_env):
            headers["Authorization"] = f"Bearer {credential}"
        return headers

    async def generate(self, request: JudgeRequest) -> str:
        log_debug(f"POST {self.endpoint} ({request.role})")
        try:
            async with httpx.AsyncClient(
                timeout=httpx.Timeout(self.timeout, connect=min(self.timeout, 30.0)),
                transport=self.transport,
            ) as client:
                response = await client.post(
                    self.endpoint, json=self.request_body(request), headers=self.headers()
                )
        except httpx.HTTPError as exc:
            raise BackendUnreachable(f"{self.endpoint}: {type(exc).__name__}: {exc}") from exc
        if response.status_code >= 400:
            raise BackendUnreachable(f"{self.endpoint}: HTTP status {response.status_code}")
        try:
            content = response.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError):
            # treated like non-conforming output so that the retry budget applies
            return response.text
        return content if isinstance(content, str) else ""
