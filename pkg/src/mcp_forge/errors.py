from __future__ import annotations

from dataclasses import dataclass


class ForgeError(Exception):
    """Base class for all errors raised by the pipeline."""

    kind: str = "ForgeError"
    """Short machine-readable name used in structured CLI error output."""

    def __init_subclass__(cls) -> None:
        if "kind" not in cls.__dict__:
            cls.kind = cls.__name__


@dataclass
class InputError(ForgeError):
    """An error in user input, such as a config file, a stub rule file or a fixture document.

    ``where`` names the offending location, usually ``path:line``.
    """

    where: str | None
    message: str

    def __str__(self) -> str:
        if self.where:
            return f"{self.where}: {self.message}"
        return self.message

    def fallback_where(self, where_else: str) -> None:
        if not self.where:
            self.where = where_else


class ArtifactNotFound(ForgeError):
    """A stage input file does not exist."""

    kind = "FileNotFound"
