from __future__ import annotations

import json
import shlex
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from ..errors import ArtifactNotFound, InputError
from ..schema_core import canonical_json, canonicalize
from ._request import ROLE_SCHEMAS, JudgeRequest, Role, StubRuleMissing, schema_errors


class MalformedRule(InputError):
    """A stub rule file contains a line that is not a valid rule."""


@dataclass(frozen=True)
class Rule:
    role: Role
    predicates: tuple[str, ...]
    response: Any
    where: str

    def matches(self, request: JudgeRequest) -> bool:
        return request.role == self.role and all(p in request.prompt for p in self.predicates)


@dataclass(frozen=True)
class RuleTable:
    """Stub rules in file order; the first matching rule wins."""

    rules: tuple[Rule, ...] = ()

    def __len__(self) -> int:
        return len(self.rules)

    def lookup(self, request: JudgeRequest) -> Rule:
        for rule in self.rules:
            if rule.matches(request):
                return rule
        raise StubRuleMissing(f"no stub rule for a `{request.role}` request")


def parse_rule(line: str, where: str) -> Rule:
    head, sep, body = line.partition("=>")
    if not sep:
        raise MalformedRule(where, "expected `role \"predicate\"... => {response}`")
    try:
        words = shlex.split(head)
    except ValueError as exc:
        raise MalformedRule(where, f"cannot split predicates: {exc}") from None
    if not words:
        raise MalformedRule(where, "missing role")
    try:
        role = Role(words[0])
    except ValueError:
        raise MalformedRule(where, f"unknown role `{words[0]}`") from None
    try:
        response = json.loads(body)
    except json.JSONDecodeError as exc:
        raise MalformedRule(where, f"response is not valid JSON: {exc.msg}") from None
    if errors := schema_errors(ROLE_SCHEMAS[role], response):
        raise MalformedRule(where, f"response violates the `{role}` schema: {errors[0]}")
    return Rule(role, tuple(words[1:]), canonicalize(response), where)


def load_rules(path: str | Path) -> RuleTable:
    """Load a stub rule file.

    One rule per line: a role name, any number of quoted substring predicates, ``=>`` and the
    canned JSON response. A rule matches a request of its role whose prompt contains every
    predicate. Blank lines and lines starting with ``#`` are ignored.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ArtifactNotFound(f"stub rule file `{path}` not found") from None
    rules = []
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        rules.append(parse_rule(stripped, f"{path}:{number}"))
    return RuleTable(tuple(rules))


class StubBackend:
    """Answers requests from a rule table without any network access."""

    name = "stub"

    def __init__(self, rules: RuleTable):
        self.rules = rules

    async def generate(self, request: JudgeRequest) -> str:
        return canonical_json(self.rules.lookup(request).response)
