from __future__ import annotations

import math
from abc import ABCMeta, abstractmethod
from dataclasses import dataclass
from typing import Generic, TypeVar

from ..errors import InputError

T = TypeVar("T")


class ValueParser(Generic[T], metaclass=ABCMeta):
    """A parser for a single option value.

    Parsers raise `InputError` without a location; the option using the parser fills in the
    ``path:line`` of the offending option.
    """

    @abstractmethod
    def parse(self, input: str) -> T:
        """Parse a value."""
        ...


def _range_message(kind: str, min: object, max: object) -> str:
    if max is None and min == 0:
        return f"expected a non-negative {kind}"
    elif max is None and min == 1 and kind == "integer":
        return "expected a positive integer"
    elif max is None:
        return f"expected {kind} value not below {min}"
    elif min is None:
        return f"expected {kind} value not above {max}"
    else:
        return f"expected {kind} value in {min}..{max}"


@dataclass
class IntValue(ValueParser[int]):
    """A parser for an integer value."""

    min: int | None = None
    """Minimum value (inclusive)."""

    max: int | None = None
    """Maximum value (inclusive)."""

    def parse(self, input: str) -> int:
        try:
            value = int(input)
        except ValueError:
            raise InputError(None, "expected an integer") from None
        if (self.min is not None and value < self.min) or (
            self.max is not None and value > self.max
        ):
            raise InputError(None, _range_message("integer", self.min, self.max))
        return value


@dataclass
class FloatValue(ValueParser[float]):
    """A parser for a finite decimal number."""

    min: float | None = None
    max: float | None = None

    def parse(self, input: str) -> float:
        try:
            value = float(input)
        except ValueError:
            raise InputError(None, "expected a number") from None
        if not math.isfinite(value):
            raise InputError(None, "expected a finite number")
        if (self.min is not None and value < self.min) or (
            self.max is not None and value > self.max
        ):
            raise InputError(None, _range_message("number", self.min, self.max))
        return value


@dataclass
class StrValue(ValueParser[str]):
    """A parser for a string value."""

    allow_empty: bool = False

    def parse(self, input: str) -> str:
        if not self.allow_empty and not input:
            raise InputError(None, "expected a non-empty string")
        return input


class BoolValue(ValueParser[bool]):
    """A parser for a boolean value using ``"on"`` and ``"off"`` for ``True`` and ``False``."""

    def parse(self, input: str) -> bool:
        if input == "on":
            return True
        elif input == "off":
            return False
        raise InputError(None, "expected `on` or `off`")


class EnumValue(ValueParser[str]):
    """A parser for a fixed set of values."""

    def __init__(self, *values: str) -> None:
        self.values = tuple(values)

    def parse(self, input: str) -> str:
        if input not in self.values:
            alternatives = [f"`{value}`" for value in self.values]
            if len(alternatives) > 1:
                last = alternatives.pop()
                alternatives[-1] += f" or {last}"
            raise InputError(None, f"expected one of {', '.join(alternatives)}")
        return input
