from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any, Iterator

from jsonschema import Draft202012Validator, validators

from ..errors import ForgeError
from ._canonical import CanonicalizationError, canonicalize

SUPPORTED_TYPES = frozenset({"string", "number", "integer", "boolean", "array", "object"})


class MalformedSchema(ForgeError):
    """A tool document cannot be turned into a `ToolSpec`."""


@dataclass(frozen=True, order=True)
class ToolRef:
    """Globally unique reference to a tool, rendered as ``server_id/tool_name``."""

    server_id: str
    tool_name: str

    def __str__(self) -> str:
        return f"{self.server_id}/{self.tool_name}"

    @classmethod
    def parse(cls, text: str) -> ToolRef:
        server_id, sep, tool_name = text.partition("/")
        if not sep or not server_id or not tool_name:
            raise MalformedSchema(f"expected a tool reference `server_id/tool_name`, got {text!r}")
        return cls(server_id, tool_name)


@dataclass(frozen=True)
class ToolSpec:
    server_id: str
    tool_name: str
    description: str
    input_schema: dict[str, Any] = field(hash=False)

    @property
    def ref(self) -> ToolRef:
        return ToolRef(self.server_id, self.tool_name)

    @property
    def parameters(self) -> dict[str, Any]:
        properties = self.input_schema.get("properties", {})
        return properties if isinstance(properties, dict) else {}

    @property
    def required(self) -> list[str]:
        required = self.input_schema.get("required", [])
        return [name for name in required if isinstance(name, str)]

    def undocumented_parameters(self) -> list[str]:
        """Parameters lacking a supported type or a non-empty description."""
        result = []
        for name, schema in self.parameters.items():
            if not isinstance(schema, dict):
                result.append(name)
                continue
            types = schema.get("type")
            types = types if isinstance(types, list) else [types]
            typed = any(t in SUPPORTED_TYPES for t in types)
            description = schema.get("description")
            if not typed or not isinstance(description, str) or not description.strip():
                result.append(name)
        return sorted(result)

    def to_json(self) -> dict[str, Any]:
        return {
            "server_id": self.server_id,
            "tool_name": self.tool_name,
            "description": self.description,
            "input_schema": self.input_schema,
        }


def _check_types(schema: Any, path: str) -> None:
    if isinstance(schema, list):
        for i, item in enumerate(schema):
            _check_types(item, f"{path}/{i}")
        return
    if not isinstance(schema, dict):
        return
    if "type" in schema:
        declared = schema["type"]
        members = declared if isinstance(declared, list) else [declared]
        # nullable parameters are written as ["string", "null"]
        allowed = SUPPORTED_TYPES | ({"null"} if isinstance(declared, list) else set())
        for member in members:
            if member not in allowed:
                raise MalformedSchema(f"unsupported type {member!r} at {path or '/'}")
    for key in ("properties", "$defs", "definitions", "patternProperties"):
        nested = schema.get(key)
        if isinstance(nested, dict):
            for name, sub in nested.items():
                _check_types(sub, f"{path}/{key}/{name}")
    for key in ("items", "additionalProperties", "anyOf", "oneOf", "allOf", "not"):
        if key in schema:
            _check_types(schema[key], f"{path}/{key}")


def parse_tool_spec(raw: Any, server_id: str | None = None) -> ToolSpec:
    """Build a `ToolSpec` from a tool document.

    Accepts the normalized layout written by `ToolSpec.to_json` as well as MCP ``tools/list``
    entries (``name``, ``inputSchema``), with ``server_id`` supplied by the caller. Unknown schema
    keywords are kept but never enforced.
    """
    if not isinstance(raw, dict):
        raise MalformedSchema("tool document must be a JSON object")
    tool_name = raw.get("tool_name", raw.get("name"))
    if not isinstance(tool_name, str) or not tool_name.strip():
        raise MalformedSchema("tool document lacks a tool_name")
    server = raw.get("server_id", raw.get("server", server_id))
    if not isinstance(server, str) or not server.strip():
        raise MalformedSchema(f"tool {tool_name!r} lacks a server_id")
    if "/" in server:
        raise MalformedSchema(f"server_id {server!r} must not contain `/`")
    description = raw.get("description") or ""
    if not isinstance(description, str):
        raise MalformedSchema(f"tool {tool_name!r} has a non-string description")
    schema = raw.get("input_schema", raw.get("inputSchema", {"type": "object"}))
    if not isinstance(schema, dict):
        raise MalformedSchema(f"tool {tool_name!r} has a non-object input_schema")
    if schema.get("type", "object") != "object":
        raise MalformedSchema(f"input_schema of tool {tool_name!r} must describe an object")
    _check_types(schema, "")
    try:
        schema = canonicalize(schema)
        description = canonicalize(description)
        tool_name = canonicalize(tool_name)
        server = canonicalize(server)
    except CanonicalizationError as exc:
        raise MalformedSchema(f"tool {tool_name!r}: {exc}") from None
    return ToolSpec(server, tool_name, description, schema)


_SubsetValidator = validators.create(
    meta_schema=Draft202012Validator.META_SCHEMA,
    validators={
        keyword: Draft202012Validator.VALIDATORS[keyword]
        for keyword in ("type", "properties", "required", "items", "additionalProperties")
    },
    type_checker=Draft202012Validator.TYPE_CHECKER,
)


def json_type(value: Any) -> str:
    """JSON type name of a value, with all numbers reported as ``number``."""
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, (int, float)):
        return "number"
    if isinstance(value, str):
        return "string"
    if isinstance(value, list):
        return "array"
    return "object"


@dataclass(frozen=True)
class TypeMismatch:
    path: str
    expected: str
    actual: str

    def __str__(self) -> str:
        return f"`{self.path}`: expected {self.expected}, got {self.actual}"


@dataclass
class ValidationReport:
    missing: list[str] = field(default_factory=list)
    type_mismatches: list[TypeMismatch] = field(default_factory=list)
    unexpected: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.missing or self.type_mismatches or self.unexpected)

    def __bool__(self) -> bool:
        return self.ok

    def messages(self) -> Iterator[str]:
        for name in self.missing:
            yield f"missing required parameter `{name}`"
        for mismatch in self.type_mismatches:
            yield f"type mismatch at {mismatch}"
        for name in self.unexpected:
            yield f"unexpected parameter `{name}`"


def _strict_copy(schema: Any, root: bool = True) -> Any:
    if not isinstance(schema, dict):
        return schema
    result = {}
    for key, value in schema.items():
        if key == "properties" and isinstance(value, dict):
            result[key] = {name: _strict_copy(sub, False) for name, sub in value.items()}
        elif key == "items":
            # tuple-style items lists from older drafts are not enforced
            if isinstance(value, dict):
                result[key] = _strict_copy(value, False)
        elif key in ("type", "required", "additionalProperties"):
            result[key] = copy.deepcopy(value)
    if root and "additionalProperties" not in result:
        result["additionalProperties"] = False
    return result


def _join(path: Any) -> str:
    return "/".join(str(part) for part in path)


def validate_args(spec: ToolSpec, args: Any) -> ValidationReport:
    """Check call arguments against a tool's input schema.

    Only ``type``, ``properties``, ``required``, ``items`` and ``additionalProperties`` are
    enforced. Top-level parameters not declared by the schema are reported as unexpected.
    """
    report = ValidationReport()
    validator = _SubsetValidator(_strict_copy(spec.input_schema))
    missing: set[str] = set()
    unexpected: set[str] = set()
    for error in validator.iter_errors(args):
        prefix = list(error.absolute_path)
        if error.validator == "required" and isinstance(error.instance, dict):
            for name in error.validator_value:
                if name not in error.instance:
                    missing.add(_join(prefix + [name]))
        elif error.validator == "additionalProperties" and isinstance(error.instance, dict):
            declared = error.schema.get("properties", {})
            for name in error.instance:
                if name not in declared:
                    unexpected.add(_join(prefix + [name]))
        elif error.validator == "type":
            expected = error.validator_value
            if isinstance(expected, list):
                expected = "|".join(expected)
            report.type_mismatches.append(
                TypeMismatch(_join(prefix), str(expected), json_type(error.instance))
            )
    report.missing = sorted(missing)
    report.unexpected = sorted(unexpected)
    report.type_mismatches.sort(key=lambda m: (m.path, m.expected))
    return report
