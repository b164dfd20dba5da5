from __future__ import annotations

import hashlib
import json
import math
import unicodedata
from decimal import Decimal
from typing import Any

from ..errors import ForgeError

DIGEST_ALGORITHM = "sha256-canonical-json-v1"
"""Identifier of the canonical serialization + hash pair, recorded in artifact headers."""

_SEPARATORS = (",", ":")


class CanonicalizationError(ForgeError):
    """A value cannot be represented in canonical JSON."""


class NonFiniteNumber(CanonicalizationError):
    """NaN and the infinities have no JSON representation."""


def _normalize(text: str) -> str:
    try:
        text.encode("utf-8")
    except UnicodeEncodeError as exc:
        raise CanonicalizationError(f"string is not valid unicode: {exc.reason}") from None
    return unicodedata.normalize("NFC", text)


def canonicalize(value: Any) -> Any:
    """Return the canonical form of a JSON value.

    Object keys are NFC normalized and sorted by code point, strings are NFC normalized, floats
    with an integral value below 10^21 become integers and ``-0.0`` becomes ``0``. Tuples are
    treated as arrays. The result is again a plain JSON value, so canonicalization is idempotent.
    """
    if value is None or isinstance(value, bool):
        return value
    if isinstance(value, int):
        return int(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise NonFiniteNumber(f"cannot canonicalize {value!r}")
        if value.is_integer() and abs(value) < 1e21:
            return int(value)
        return value
    if isinstance(value, str):
        return _normalize(value)
    if isinstance(value, (list, tuple)):
        return [canonicalize(item) for item in value]
    if isinstance(value, dict):
        items: dict[str, Any] = {}
        for key, item in value.items():
            if not isinstance(key, str):
                raise CanonicalizationError(f"object keys must be strings, not {key!r}")
            normalized = _normalize(key)
            if normalized in items:
                raise CanonicalizationError(
                    f"duplicate key after NFC normalization: {normalized!r}"
                )
            items[normalized] = canonicalize(item)
        return {key: items[key] for key in sorted(items)}
    raise CanonicalizationError(f"type {type(value).__name__} is not a JSON value")


def format_number(value: float) -> str:
    """Shortest round-trip decimal form of a finite float, laid out like ECMAScript's
    ``Number.prototype.toString``."""
    if not math.isfinite(value):
        raise NonFiniteNumber(f"cannot serialize {value!r}")
    if value == 0:
        return "0"
    sign = "-" if value < 0 else ""
    # repr yields the shortest digit string that round-trips
    _, digit_tuple, exponent = Decimal(repr(abs(value))).as_tuple()
    digits = "".join(map(str, digit_tuple)).rstrip("0") or "0"
    assert isinstance(exponent, int)
    exponent += len("".join(map(str, digit_tuple))) - len(digits)
    k = len(digits)
    n = exponent + k

    if k <= n <= 21:
        text = digits + "0" * (n - k)
    elif 0 < n <= 21:
        text = f"{digits[:n]}.{digits[n:]}"
    elif -6 < n <= 0:
        text = f"0.{'0' * -n}{digits}"
    else:
        e = n - 1
        mantissa = digits[0] if k == 1 else f"{digits[0]}.{digits[1:]}"
        text = f"{mantissa}e{'+' if e >= 0 else '-'}{abs(e)}"
    return sign + text


def _serialize(value: Any, out: list[str]) -> None:
    if value is None:
        out.append("null")
    elif value is True:
        out.append("true")
    elif value is False:
        out.append("false")
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, float):
        out.append(format_number(value))
    elif isinstance(value, str):
        out.append(json.dumps(value, ensure_ascii=False))
    elif isinstance(value, list):
        out.append("[")
        for i, item in enumerate(value):
            if i:
                out.append(",")
            _serialize(item, out)
        out.append("]")
    else:
        out.append("{")
        for i, (key, item) in enumerate(value.items()):
            if i:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=False))
            out.append(":")
            _serialize(item, out)
        out.append("}")


def canonical_json(value: Any) -> str:
    """Serialize a JSON value in canonical form, without any insignificant whitespace."""
    out: list[str] = []
    _serialize(canonicalize(value), out)
    return "".join(out)


def canonical_bytes(value: Any) -> bytes:
    return canonical_json(value).encode("utf-8")


def canonical_hash(value: Any) -> str:
    """Lowercase hex SHA-256 of the canonical UTF-8 serialization."""
    return hashlib.sha256(canonical_bytes(value)).hexdigest()


def _reject_constant(name: str) -> Any:
    raise NonFiniteNumber(f"cannot canonicalize {name}")


def loads_canonical(text: str | bytes) -> Any:
    """Parse JSON text and return its canonical form."""
    return canonicalize(json.loads(text, parse_constant=_reject_constant))
