from __future__ import annotations

import typing
from dataclasses import MISSING, dataclass, field
from typing import Any, Generic, Iterable, Literal, TypeVar

from typing_extensions import Self

from ..errors import InputError
from ._low_level import ConfigCommand, ConfigLine, split_into_commands
from ._values import ValueParser

T = TypeVar("T")


class ConfigOptions:
    """Base class for defining an options section.

    Derive from this class and assign `Option` objects to class attributes to declare the options
    that may appear. Parsing happens on construction; every option line must be claimed by one of
    the declared options, otherwise an `InputError` naming the line is raised.
    """

    # private attributes avoid clashes with option names chosen by subclasses
    __tmp_option_protos: list[Option[Any]]
    __option_protos: list[Option[Any]] = []

    __values: dict[str, Any]
    __where: str

    def __init__(self, contents: Iterable[ConfigLine] = (), where: str = "<config>") -> None:
        self.__where = where
        self.__values = {}
        commands = list(split_into_commands(contents, where))
        by_name: dict[str, list[ConfigCommand]] = {}
        for command in commands:
            by_name.setdefault(command.name, []).append(command)

        for proto in self.__option_protos:
            self.__values[proto.attr_name] = proto.parse(by_name.pop(proto.attr_name, []), where)

        for name, unknown in by_name.items():
            raise InputError(f"{where}:{unknown[0].line}", f"unknown option `{name}`")

        self.validate()

    def validate(self) -> None:
        """Invoked after all options are parsed."""
        pass

    @property
    def where(self) -> str:
        return self.__where

    @classmethod
    def option_names(cls) -> list[str]:
        return [proto.attr_name for proto in cls.__option_protos]

    @classmethod
    def __register_option__(cls, proto: Option[Any]) -> None:
        try:
            registry = cls.__tmp_option_protos
        except AttributeError:
            registry = cls.__tmp_option_protos = list(cls.__option_protos)
        registry.append(proto)

    def __init_subclass__(cls) -> None:
        if "_ConfigOptions__tmp_option_protos" in cls.__dict__:
            cls.__option_protos = cls.__tmp_option_protos
            del cls.__tmp_option_protos

    def __option_value__(self, name: str) -> Any:
        return self.__values[name]

    def __set_option_value__(self, name: str, value: Any) -> None:
        self.__values[name] = value

    def as_dict(self) -> dict[str, Any]:
        return dict(self.__values)

    def __repr__(self):  # pragma: no cover (debug only)
        contents = ", ".join(f"{k}={v!r}" for k, v in self.__values.items())
        return f"<{type(self).__name__} {contents}>"


@dataclass(repr=False, eq=False)
class Option(Generic[T]):
    """An option that can be specified at most once.

    Uses a `ValueParser` for the option's arguments. Without a default the option is required.
    """

    value_parser: ValueParser[T]

    default: T | Literal[MISSING] = field(default_factory=lambda: MISSING)  # type: ignore

    attr_name: str = field(init=False)

    def parse(self, options: list[ConfigCommand], where: str) -> T:
        if not options:
            if self.default is MISSING:
                raise InputError(where, f"missing option `{self.attr_name}`")
            return self.default  # type: ignore
        if len(options) > 1:
            raise InputError(
                f"{where}:{options[1].line}", f"option `{self.attr_name}` defined multiple times"
            )
        try:
            return self.value_parser.parse(options[0].arguments)
        except InputError as error:
            error.fallback_where(f"{where}:{options[0].line}")
            raise error

    def __set_name__(self, owner: object, name: str) -> None:
        self.attr_name = name
        if isinstance(owner, type) and issubclass(owner, ConfigOptions):
            owner.__register_option__(self)

    @typing.overload
    def __get__(self, instance: ConfigOptions, owner: type[ConfigOptions]) -> T:
        ...

    @typing.overload
    def __get__(self, instance: None, owner: object = None) -> Self:
        ...

    def __get__(self, instance: object, owner: object = None) -> T | Self:
        if isinstance(instance, ConfigOptions):
            return instance.__option_value__(self.attr_name)
        return self

    def __set__(self, instance: ConfigOptions, value: T) -> None:
        instance.__set_option_value__(self.attr_name, value)
