"""Agents that produce final answers for rollouts.

`ScriptedAgent` replays a task's ground-truth trajectory through the tool backend and derives
its answer from the responses it got back. `CommandAgent` runs an external program per rollout
that talks newline-delimited JSON over its stdin and stdout:

- the agent receives ``{"type": "task", "task_id", "rollout", "prompt", "answer_schema",
  "tools"}``;
- it may send ``{"type": "call", "tool": "<server_id>/<tool_name>", "arguments": {...}}`` and
  receives ``{"type": "result", "output": ..., "isError": bool, "tier": ...}`` for each. A bare
  tool name works when it is unique. Calls that cannot be made come back with ``isError``;
- it finishes by sending ``{"type": "answer", "answer": {...}}``.

An agent that exits without answering, or that sends anything else, has answered nothing.
"""

from __future__ import annotations

import asyncio
import json
import random
import shlex
import subprocess
from dataclasses import dataclass
from typing import Any, Protocol

from ..errors import ForgeError, InputError
from ..explorer import CallDag, CallNode, ToolBackend
from ..forge import ExtractionFailed, TaskRecord, extract_all
from ..runtime import log, log_debug, log_warning
from ..schema_core import (
    CanonicalizationError,
    MalformedSchema,
    ToolRef,
    ToolSpec,
    canonical_json,
)


class AgentFailed(ForgeError):
    """An agent program could not be started."""


class Agent(Protocol):
    name: str

    async def solve(self, task: TaskRecord, backend: ToolBackend, rollout: int) -> Any:
        """Work on a task using ``backend`` for tool calls and return the final answer."""
        ...


@dataclass
class ScriptedAgent:
    failure_rate: float = 0.0
    """Fraction of rollouts in which one answer field is deliberately wrong."""
    seed: int = 0
    name: str = "scripted"

    async def solve(self, task: TaskRecord, backend: ToolBackend, rollout: int) -> Any:
        if not task.trajectory:
            return {}
        nodes = []
        for step in task.trajectory:
            result = await backend.call(step.tool, step.args)
            nodes.append(
                CallNode(step.node_id, step.tool, step.args, result.output, result.is_error)
            )
        dag = CallDag(task.source_dag, task.trajectory[0].tool, nodes, budget_used=len(nodes))
        try:
            answer = extract_all(task.extraction, dag, task.selected_nodes)
        except ExtractionFailed as exc:
            log_debug(f"{task.task_id} rollout {rollout}: {exc}")
            return {}

        if self.failure_rate and answer:
            rng = random.Random(f"{self.seed}:rollout:{task.task_id}:{rollout}")
            if rng.random() < self.failure_rate:
                answer[rng.choice(sorted(answer))] = "unknown"
        return answer


def resolve_tool(name: Any, tools: list[ToolSpec]) -> ToolRef:
    """Resolve a tool name sent by an agent, qualified or bare when unique among ``tools``."""
    if not isinstance(name, str) or not name:
        raise MalformedSchema("the call names no tool")
    if "/" in name:
        return ToolRef.parse(name)
    matches = sorted({spec.ref for spec in tools if spec.tool_name == name})
    if len(matches) != 1:
        problem = "is ambiguous" if matches else "is unknown"
        raise MalformedSchema(f"tool name `{name}` {problem}, use server_id/tool_name")
    return matches[0]


@dataclass
class CommandAgent:
    command: list[str]
    name: str = "command"

    async def solve(self, task: TaskRecord, backend: ToolBackend, rollout: int) -> Any:
        try:
            proc = await asyncio.create_subprocess_exec(
                *self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
            )
        except OSError as exc:
            command = shlex.join(self.command)
            raise AgentFailed(f"could not start agent `{command}`: {exc}") from None
        stdin, stdout = proc.stdin, proc.stdout
        assert stdin is not None and stdout is not None

        async def send(message: Any) -> None:
            stdin.write((canonical_json(message) + "\n").encode())
            await stdin.drain()

        answer: Any = None
        try:
            tools = await backend.list_tools()
            await send(
                {
                    "type": "task",
                    "task_id": task.task_id,
                    "rollout": rollout,
                    "prompt": task.prompt,
                    "answer_schema": task.answer_schema,
                    "tools": [spec.to_json() for spec in tools],
                }
            )
            while line := await stdout.readline():
                try:
                    message = json.loads(line)
                except json.JSONDecodeError:
                    log_warning(f"{task.task_id} rollout {rollout}: agent sent invalid JSON")
                    break
                kind = message.get("type") if isinstance(message, dict) else None
                if kind == "call":
                    try:
                        tool = resolve_tool(message.get("tool"), tools)
                        result = await backend.call(tool, message.get("arguments", {}))
                    except (MalformedSchema, CanonicalizationError) as exc:
                        log_warning(f"{task.task_id} rollout {rollout}: rejected agent call: {exc}")
                        error = {"code": "invalid_call", "message": str(exc)}
                        await send(
                            {
                                "type": "result",
                                "output": {"error": error},
                                "isError": True,
                                "tier": None,
                            }
                        )
                        continue
                    await send(
                        {
                            "type": "result",
                            "output": result.output,
                            "isError": result.is_error,
                            "tier": result.meta.get("tier"),
                        }
                    )
                elif kind == "answer":
                    answer = message.get("answer")
                    break
                else:
                    log_warning(f"{task.task_id} rollout {rollout}: unexpected agent message")
                    break
        except (BrokenPipeError, ConnectionResetError):
            log_warning(f"{task.task_id} rollout {rollout}: agent closed its input")
        finally:
            if proc.returncode is None:
                stdin.close()
                try:
                    await asyncio.wait_for(proc.wait(), timeout=5)
                except asyncio.TimeoutError:
                    proc.kill()
                    await proc.wait()
        return answer


def parse_agent(spec: str, *, seed: int = 0) -> Agent:
    """``scripted``, ``scripted:<failure rate>`` or a command line."""
    if spec == "scripted" or spec.startswith("scripted:"):
        _, _, rate = spec.partition(":")
        try:
            failure_rate = float(rate) if rate else 0.0
        except ValueError:
            raise InputError("agent", f"invalid failure rate `{rate}`") from None
        if not 0.0 <= failure_rate <= 1.0:
            raise InputError("agent", "the failure rate must be between 0 and 1")
        return ScriptedAgent(failure_rate, seed)
    command = shlex.split(spec)
    if not command:
        raise InputError("agent", "empty agent command")
    log(f"using agent command {shlex.join(command)}")
    return CommandAgent(command)
