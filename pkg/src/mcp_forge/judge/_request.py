from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

from jsonschema import Draft202012Validator

from ..errors import ForgeError
from ..schema_core import canonical_hash, canonicalize


class Role(str, enum.Enum):
    """Every LLM-backed decision made by the pipeline goes through one of these roles."""

    EDGE_JUDGE = "edge_judge"
    SERVER_SCREEN = "server_screen"
    EXPLORER_AGENT = "explorer_agent"
    TASK_SYNTHESIZER = "task_synthesizer"
    TASK_VALIDATOR = "task_validator"
    FUZZY_GENERATOR = "fuzzy_generator"
    ANSWER_JUDGE = "answer_judge"

    def __str__(self) -> str:
        return self.value


class JudgeError(ForgeError):
    pass


class BackendUnreachable(JudgeError):
    """The configured backend could not be contacted or answered with an error status."""


class SchemaViolation(JudgeError):
    """The backend kept returning output that does not conform to the response schema."""


class StubRuleMissing(JudgeError):
    """No stub rule matches a request."""


_BOOL = {"type": "boolean"}
_CONFIDENCE = {"type": "string", "enum": ["high", "medium", "low"]}

_EXTRACT = {
    "type": "object",
    "properties": {
        "node": {"type": "integer", "minimum": 0},
        "path": {"type": "string"},
        "source": {"type": "string", "enum": ["output", "args"]},
        "transform": {"type": "string", "enum": ["year", "lower", "upper", "length"]},
    },
    "required": ["node", "path"],
    "additionalProperties": False,
}

ROLE_SCHEMAS: dict[Role, dict[str, Any]] = {
    Role.EDGE_JUDGE: {
        "type": "object",
        "properties": {
            "chainable": _BOOL,
            "confidence": _CONFIDENCE,
            "rationale": {"type": "string"},
        },
        "required": ["chainable"],
    },
    Role.SERVER_SCREEN: {
        "type": "object",
        "properties": {
            "stateless": _BOOL,
            "no_user_auth": _BOOL,
            "schema_clear": _BOOL,
            "nontrivial": _BOOL,
            "rationale": {"type": "object", "additionalProperties": {"type": "string"}},
        },
        "required": ["stateless", "no_user_auth", "schema_clear", "nontrivial"],
    },
    Role.EXPLORER_AGENT: {
        "type": "object",
        "properties": {
            "action": {"type": "string", "enum": ["fan_out", "sequential", "fan_in", "stop"]},
            "calls": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "tool": {"type": "string"},
                        "args": {"type": "object"},
                        "parents": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                    },
                    "required": ["tool", "args"],
                },
            },
        },
        "required": ["action"],
    },
    Role.TASK_SYNTHESIZER: {
        "type": "object",
        "properties": {
            "prompt": {"type": "string"},
            "answer_schema": {"type": "object"},
            "answer_template": {"type": "string"},
            "difficulty": {"type": "string", "enum": ["easy", "medium", "hard"]},
            "selected_nodes": {"type": "array", "items": {"type": "integer", "minimum": 0}},
            "extraction": {
                "type": "object",
                "additionalProperties": {
                    "anyOf": [
                        _EXTRACT,
                        {
                            "type": "object",
                            "properties": {
                                "derive": {
                                    "type": "string",
                                    "enum": [
                                        "diff",
                                        "abs_diff",
                                        "sum",
                                        "min",
                                        "max",
                                        "argmin",
                                        "argmax",
                                    ],
                                },
                                "of": {"type": "array", "items": _EXTRACT, "minItems": 1},
                                "labels": {"type": "array", "items": _EXTRACT},
                            },
                            "required": ["derive", "of"],
                            "additionalProperties": False,
                        },
                    ]
                },
            },
        },
        "required": [
            "prompt",
            "answer_schema",
            "answer_template",
            "difficulty",
            "selected_nodes",
            "extraction",
        ],
    },
    Role.TASK_VALIDATOR: {
        "type": "object",
        "properties": {
            "verifiable": _BOOL,
            "well_specified": _BOOL,
            "interpretable": _BOOL,
            "realism": {"type": "integer", "minimum": 0, "maximum": 10},
            "difficulty_calibrated": _BOOL,
            "rationale": {"type": "string"},
        },
        "required": [
            "verifiable",
            "well_specified",
            "interpretable",
            "realism",
            "difficulty_calibrated",
        ],
    },
    Role.FUZZY_GENERATOR: {
        "type": "object",
        "properties": {
            "choice": {"type": ["integer", "null"], "minimum": 0},
            "output": {},
        },
        "required": ["choice"],
    },
    Role.ANSWER_JUDGE: {
        "type": "object",
        "properties": {"equivalent": _BOOL, "rationale": {"type": "string"}},
        "required": ["equivalent"],
    },
}


def schema_errors(schema: dict[str, Any], value: Any) -> list[str]:
    """Messages for every way ``value`` violates ``schema``, empty when it conforms."""
    validator = Draft202012Validator(schema)
    return sorted(error.message for error in validator.iter_errors(value))


@dataclass(frozen=True)
class JudgeRequest:
    role: Role
    prompt: str
    response_schema: dict[str, Any] = field(default_factory=dict, hash=False)
    temperature: float = 0.0

    def __post_init__(self) -> None:
        if not isinstance(self.role, Role):
            object.__setattr__(self, "role", Role(self.role))
        if not self.response_schema:
            object.__setattr__(self, "response_schema", ROLE_SCHEMAS[self.role])
        if self.temperature < 0:
            raise ValueError("temperature must not be negative")

    @property
    def digest(self) -> str:
        """Cache key of the request."""
        return canonical_hash(
            {
                "role": self.role.value,
                "prompt": self.prompt,
                "response_schema": self.response_schema,
                "temperature": self.temperature,
            }
        )


@dataclass(frozen=True)
class JudgeResponse:
    value: Any
    backend: str
    """Which backend produced the value: ``http``, ``stub`` or ``cache``."""
    request_digest: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", canonicalize(self.value))
