from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable

from ..errors import InputError

__all__ = [
    "split_into_sections",
    "ConfigSection",
    "split_into_commands",
    "ConfigCommand",
]


@dataclass(frozen=True)
class ConfigLine:
    line: int
    """1-based line number within the config file."""

    text: str


@dataclass(frozen=True)
class ConfigSection:
    """A single section within a config file."""

    index: int
    """Sequential index of the section within the config file."""

    name: str
    """Name of the section, the ``name`` part of a ``[name]`` or ``[name arguments]`` header.

    For content preceding the first header the name is ``""``.
    """

    arguments: str
    """The ``arguments`` part of the header or the empty string if not present."""

    line: int
    """Line number of the header (or of the first content line for headerless content)."""

    contents: tuple[ConfigLine, ...] = field(compare=False)
    """Lines following the header up to the next section or the end of the file."""

    def ensure_no_arguments(self, where: str) -> None:
        if self.arguments:
            raise InputError(
                f"{where}:{self.line}", f"unexpected arguments for section `{self.name}`"
            )


@dataclass(frozen=True)
class ConfigCommand:
    """A single option line within a section."""

    index: int
    name: str
    arguments: str
    line: int

    @property
    def arg_list(self) -> list[str]:
        return self.arguments.split()


_SECTION_HEADER_RE = re.compile(
    r"""
        ^\[(?!\[) [ \t]*
        (?P<name>[^\]\s]+)
        ([ \t]+ (?P<arguments>[^\]]*?))?
        [ \t]*
        (?P<closing>\] [ \t]* (\#.*)?)?
        $
    """,
    re.VERBOSE,
)
_COMMAND_RE = re.compile(r"^[ \t]*(?P<name>[^\[#\s]\S*?)(?:[ \t]+(?P<arguments>.*?))?[ \t]*$")


def _strip_comment(text: str) -> str:
    pos = text.find("#")
    return text if pos < 0 else text[:pos]


def split_into_sections(contents: str, where: str = "<config>") -> Iterable[ConfigSection]:
    """Split the contents of a config file into individual sections.

    A line starting with ``[[`` is content starting with a literal ``[``.
    """
    index = 0
    name: str | None = None
    arguments = ""
    header_line = 0
    lines: list[ConfigLine] = []

    def flush() -> ConfigSection | None:
        if name is None and not any(_strip_comment(line.text).strip() for line in lines):
            return None
        return ConfigSection(
            index=index,
            name=name or "",
            arguments=arguments,
            line=header_line or (lines[0].line if lines else 1),
            contents=tuple(lines),
        )

    for number, text in enumerate(contents.splitlines(), start=1):
        if text.startswith("[") and not text.startswith("[["):
            match = _SECTION_HEADER_RE.match(text)
            if match is None or match["closing"] is None:
                raise InputError(f"{where}:{number}", "section header is missing a closing `]`")
            if (section := flush()) is not None:
                yield section
                index += 1
            name = match["name"]
            arguments = (match["arguments"] or "").strip()
            header_line = number
            lines = []
            continue
        if text.startswith("[["):
            text = text[1:]
        lines.append(ConfigLine(number, text))

    if (section := flush()) is not None:
        yield section


def split_into_commands(
    contents: Iterable[ConfigLine], where: str = "<config>"
) -> Iterable[ConfigCommand]:
    """Split the lines of a section into individual option lines, skipping blanks and comments."""
    index = 0
    for line in contents:
        text = _strip_comment(line.text)
        if not text.strip():
            continue
        if text.lstrip().startswith("["):
            raise InputError(
                f"{where}:{line.line}",
                "unexpected `[`, remove the leading whitespace to start a new section",
            )
        match = _COMMAND_RE.match(text)
        assert match is not None
        yield ConfigCommand(
            index=index, name=match["name"], arguments=match["arguments"] or "", line=line.line
        )
        index += 1
