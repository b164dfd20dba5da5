from __future__ import annotations

import typing
from dataclasses import dataclass, field
from typing import Any, Callable, Generic, TypeVar

from typing_extensions import Self

from ..errors import InputError
from ._low_level import ConfigLine, ConfigSection, split_into_sections
from ._options import ConfigOptions

O = TypeVar("O", bound=ConfigOptions)


class ConfigParser:
    """Base class for config file parsers.

    Derive from this class and assign `OptionsSection` objects to class attributes to declare the
    sections that may appear. A section that is absent is parsed as if it were empty, so every
    option takes its default value. Sections not claimed by any declared section are errors.
    """

    __tmp_section_protos: list[OptionsSection[Any]]
    __section_protos: list[OptionsSection[Any]] = []

    __results: dict[str, Any]
    __where: str

    def __init__(self, contents: str = "", where: str = "<config>") -> None:
        """Parse the contents of a config file.

        :param where: Name used in error locations, usually the path of the config file.
        """
        self.__where = where
        self.__results = {}

        by_name: dict[str, list[ConfigSection]] = {}
        for section in split_into_sections(contents, where):
            by_name.setdefault(section.name, []).append(section)

        for proto in self.__section_protos:
            self.__results[proto.attr_name] = proto.parse(by_name.pop(proto.attr_name, []), where)

        for name, unknown in by_name.items():
            if name:
                message = f"unknown section `{name}`"
            else:
                message = "content outside of a section"
            raise InputError(f"{where}:{unknown[0].line}", message)

        self.validate()

    def validate(self) -> None:
        """Invoked after all sections are parsed."""
        pass

    @property
    def where(self) -> str:
        return self.__where

    @classmethod
    def __register_section__(cls, proto: OptionsSection[Any]) -> None:
        try:
            registry = cls.__tmp_section_protos
        except AttributeError:
            registry = cls.__tmp_section_protos = list(cls.__section_protos)
        registry.append(proto)

    def __init_subclass__(cls) -> None:
        if "_ConfigParser__tmp_section_protos" in cls.__dict__:
            cls.__section_protos = cls.__tmp_section_protos
            del cls.__tmp_section_protos

    def __section_value__(self, name: str) -> Any:
        return self.__results[name]


@dataclass(repr=False, eq=False)
class OptionsSection(Generic[O]):
    """Parses a section into a `ConfigOptions` instance.

    The section may appear at most once and takes no arguments.
    """

    config_options: Callable[..., O]

    attr_name: str = field(init=False)

    def parse(self, sections: list[ConfigSection], where: str) -> O:
        if len(sections) > 1:
            raise InputError(
                f"{where}:{sections[1].line}", f"section `{self.attr_name}` defined multiple times"
            )
        contents: tuple[ConfigLine, ...] = ()
        if sections:
            sections[0].ensure_no_arguments(where)
            contents = sections[0].contents
        return self.config_options(contents, where)

    def __set_name__(self, owner: object, name: str) -> None:
        self.attr_name = name
        if isinstance(owner, type) and issubclass(owner, ConfigParser):
            owner.__register_section__(self)

    @typing.overload
    def __get__(self, instance: ConfigParser, owner: type[ConfigParser]) -> O:
        ...

    @typing.overload
    def __get__(self, instance: None, owner: object = None) -> Self:
        ...

    def __get__(self, instance: object, owner: object = None) -> O | Self:
        if isinstance(instance, ConfigParser):
            return instance.__section_value__(self.attr_name)
        return self
