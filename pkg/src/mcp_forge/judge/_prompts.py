from __future__ import annotations

from functools import lru_cache
from importlib import resources
from string import Template
from typing import Any

from ..schema_core import canonical_json
from ._request import Role


@lru_cache(maxsize=None)
def prompt_template(role: Role) -> Template:
    text = resources.files(__package__).joinpath("prompts", f"{role.value}.txt").read_text("utf-8")
    return Template(text)


def render_prompt(role: Role, **fields: Any) -> str:
    """Fill a role's prompt template.

    Non-string values are rendered as canonical JSON, so prompts for equal inputs are equal.
    """
    values = {
        name: value if isinstance(value, str) else canonical_json(value)
        for name, value in fields.items()
    }
    return prompt_template(role).substitute(values)


def marker(name: str, value: Any) -> str:
    """A ``name: <value>`` line; the angle brackets let stub rules match a value exactly."""
    return f"{name}: <{value}>"
