from ._gateway import Backend, JudgeGateway, gateway_from_config
from ._http import HttpBackend
from ._prompts import marker, prompt_template, render_prompt
from ._request import (
    ROLE_SCHEMAS,
    BackendUnreachable,
    JudgeError,
    JudgeRequest,
    JudgeResponse,
    Role,
    SchemaViolation,
    StubRuleMissing,
    schema_errors,
)
from ._stub import MalformedRule, Rule, RuleTable, StubBackend, load_rules, parse_rule

__all__ = [
    "Backend",
    "JudgeGateway",
    "gateway_from_config",
    "HttpBackend",
    "marker",
    "prompt_template",
    "render_prompt",
    "ROLE_SCHEMAS",
    "BackendUnreachable",
    "JudgeError",
    "JudgeRequest",
    "JudgeResponse",
    "Role",
    "SchemaViolation",
    "StubRuleMissing",
    "schema_errors",
    "MalformedRule",
    "Rule",
    "RuleTable",
    "StubBackend",
    "load_rules",
    "parse_rule",
]
