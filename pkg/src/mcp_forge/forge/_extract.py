from __future__ import annotations

import re
from decimal import Decimal, InvalidOperation
from typing import Any, Mapping

from ..errors import ForgeError
from ..explorer import CallDag
from ..schema_core import canonical_json

DERIVATIONS = ("diff", "abs_diff", "sum", "min", "max", "argmin", "argmax")
TRANSFORMS = ("year", "lower", "upper", "length")

_YEAR_RE = re.compile(r"(?<!\d)(\d{4})(?!\d)")


class ExtractionFailed(ForgeError):
    """A placeholder value cannot be located in the recorded calls."""


def resolve_pointer(document: Any, pointer: str) -> Any:
    """Resolve a JSON pointer, ``""`` being the whole document."""
    if pointer == "":
        return document
    if not pointer.startswith("/"):
        raise ExtractionFailed(f"path {pointer!r} is not a JSON pointer")
    current = document
    for token in pointer[1:].split("/"):
        token = token.replace("~1", "/").replace("~0", "~")
        if isinstance(current, dict):
            if token not in current:
                raise ExtractionFailed(f"path {pointer!r}: no key {token!r}")
            current = current[token]
        elif isinstance(current, list):
            if not token.isdigit() or int(token) >= len(current):
                raise ExtractionFailed(f"path {pointer!r}: no index {token!r}")
            current = current[int(token)]
        else:
            raise ExtractionFailed(f"path {pointer!r}: cannot descend into a scalar")
    return current


def as_text(value: Any) -> str:
    """Answer fields are strings; anything else is written as canonical JSON."""
    return value if isinstance(value, str) else canonical_json(value)


def _apply_transform(value: Any, transform: str | None) -> str:
    if transform is None:
        return as_text(value)
    if transform == "length":
        if not isinstance(value, (str, list, dict)):
            raise ExtractionFailed(f"cannot take the length of {as_text(value)}")
        return str(len(value))
    text = as_text(value)
    if transform == "lower":
        return text.lower()
    if transform == "upper":
        return text.upper()
    if transform == "year":
        if not (match := _YEAR_RE.search(text)):
            raise ExtractionFailed(f"no year in {text!r}")
        return match.group(1)
    raise ExtractionFailed(f"unknown transform {transform!r}")


def _locate(spec: Mapping[str, Any], dag: CallDag, selected: set[int]) -> str:
    node_id = spec["node"]
    if node_id not in selected:
        raise ExtractionFailed(f"node {node_id} is not among the selected nodes")
    node = dag.node(node_id)
    if node is None:
        raise ExtractionFailed(f"node {node_id} does not exist in {dag.dag_id}")
    if node.is_error:
        raise ExtractionFailed(f"node {node_id} of {dag.dag_id} failed")
    source = node.args if spec.get("source", "output") == "args" else node.output
    return _apply_transform(resolve_pointer(source, spec["path"]), spec.get("transform"))


def _number(text: str) -> Decimal:
    try:
        value = Decimal(text.strip())
    except InvalidOperation:
        raise ExtractionFailed(f"{text!r} is not a number") from None
    if not value.is_finite():
        raise ExtractionFailed(f"{text!r} is not a finite number")
    return value


def format_decimal(value: Decimal) -> str:
    if value == value.to_integral_value():
        return str(int(value))
    return format(value.normalize(), "f")


def _derive(spec: Mapping[str, Any], dag: CallDag, selected: set[int]) -> str:
    operation = spec["derive"]
    texts = [_locate(item, dag, selected) for item in spec["of"]]
    if not texts:
        raise ExtractionFailed(f"`{operation}` needs at least one value")
    numbers = [_number(text) for text in texts]
    if operation in ("diff", "abs_diff"):
        if len(numbers) != 2:
            raise ExtractionFailed(f"`{operation}` needs exactly two values")
        result = numbers[0] - numbers[1]
        return format_decimal(abs(result) if operation == "abs_diff" else result)
    if operation == "sum":
        return format_decimal(sum(numbers, Decimal(0)))
    if operation in ("min", "max"):
        return format_decimal(min(numbers) if operation == "min" else max(numbers))
    if operation in ("argmin", "argmax"):
        labels = spec.get("labels") or []
        if len(labels) != len(numbers):
            raise ExtractionFailed(f"`{operation}` needs one label per value")
        best = min(numbers) if operation == "argmin" else max(numbers)
        return _locate(labels[numbers.index(best)], dag, selected)
    raise ExtractionFailed(f"unknown derivation {operation!r}")


def extract_field(spec: Mapping[str, Any], dag: CallDag, selected: set[int]) -> str:
    """Compute one answer field from the recorded calls of the selected nodes.

    A spec either locates a value (``node``, ``path``, optional ``source`` and ``transform``) or
    derives one (``derive``, ``of`` and, for ``argmin``/``argmax``, ``labels``).
    """
    try:
        if "derive" in spec:
            return _derive(spec, dag, selected)
        return _locate(spec, dag, selected)
    except (KeyError, TypeError) as exc:
        raise ExtractionFailed(f"malformed extraction spec: {exc}") from None


def extract_all(
    extraction: Mapping[str, Mapping[str, Any]], dag: CallDag, selected: list[int]
) -> dict[str, str]:
    chosen = set(selected)
    return {key: extract_field(extraction[key], dag, chosen) for key in sorted(extraction)}
