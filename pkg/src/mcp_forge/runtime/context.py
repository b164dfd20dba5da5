from __future__ import annotations

import types
from contextvars import ContextVar
from typing import Any, Generic, TypeVar

T = TypeVar("T")


class _MISSING_TYPE:
    pass


MISSING = _MISSING_TYPE()


class ContextDescriptor(Generic[T]):
    """A descriptor that stores a value per execution context.

    Each asyncio task runs in a copy of the context of the code that created it, so assignments
    made inside a worker (a screened server, an exploration, a simulator session) stay local to
    that worker and everything it spawns, while reads fall back to the value visible when the
    worker was created and finally to the default value.

    Assigning outside of any task simply changes the value for the current (usually the main)
    context.
    """

    __var: ContextVar[Any]
    __default: T
    __owner: Any
    __name: str | None

    def __init__(self, default: T | _MISSING_TYPE = MISSING) -> None:
        if default is not MISSING:
            self.default = default  # type: ignore
        self.__owner = None
        self.__name = None
        self.__var = ContextVar(f"{__name__}.{id(self)}", default=MISSING)

    def __set_name__(self, owner: type, name: str) -> None:
        self.__owner = owner
        self.__name = name
        self.__var = ContextVar(f"{owner.__module__}.{owner.__qualname__}.{name}", default=MISSING)

    def __attr_name(self) -> str:
        if self.__name is None:
            return repr(self)
        else:
            return f"{self.__owner.__qualname__}.{self.__name}"

    def __get__(self, instance: Any, owner: type) -> T:
        value = self.__var.get()
        if value is not MISSING:
            return value
        try:
            return self.default
        except AttributeError:
            raise AttributeError(f"Context variable {self.__attr_name()} not set") from None

    def __set__(self, instance: Any, value: T) -> None:
        self.__var.set(value)

    def __delete__(self, instance: Any) -> None:
        if self.__var.get() is MISSING:
            raise AttributeError(
                f"Context variable {self.__attr_name()} not set for the current context"
            )
        self.__var.set(MISSING)

    @property
    def default(self) -> T:
        """The value returned when no context assigned one."""
        return self.__default

    @default.setter
    def default(self, value: T) -> None:
        self.__default = value


def context_class(cls: type[T]) -> type[T]:
    for name in getattr(cls, "__annotations__", ()):
        try:
            default_or_descriptor = cls.__dict__[name]
        except KeyError:
            descriptor: ContextDescriptor[Any] = ContextDescriptor()
        else:
            if isinstance(default_or_descriptor, types.FunctionType) or not hasattr(
                default_or_descriptor, "__get__"
            ):
                descriptor = ContextDescriptor(default_or_descriptor)
            else:
                continue
        setattr(cls, name, descriptor)
        descriptor.__set_name__(cls, name)
    return cls


def task_context(cls: type[T]) -> T:
    """Decorator for a class defining a group of context variables.

    The class is replaced with a singleton whose annotated attributes are backed by
    `ContextDescriptor`\\ s, using the class attribute values as defaults.
    """

    cls = context_class(cls)

    # Keeps autodoc seeing the original class while callers only ever use the singleton.
    class AsMetaclass(cls, type):  # type: ignore
        pass

    class AsInstance(metaclass=AsMetaclass):
        pass

    for attr in ("__module__", "__name__", "__qualname__", "__doc__"):
        if hasattr(cls, attr):
            setattr(AsInstance, attr, getattr(cls, attr))

    return AsInstance  # type: ignore
