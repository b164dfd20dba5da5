# Line based configuration files
from __future__ import annotations

from ._low_level import ConfigCommand, ConfigSection, split_into_commands, split_into_sections
from ._options import ConfigOptions, Option
from ._parser import ConfigParser, OptionsSection
from ._pipeline import DEFAULT_CONFIG_NAME, PipelineConfig, load_config
from ._values import BoolValue, EnumValue, FloatValue, IntValue, StrValue, ValueParser

__all__ = [
    "split_into_sections",
    "ConfigSection",
    "split_into_commands",
    "ConfigCommand",
    # from ._options
    "ConfigOptions",
    "Option",
    # from ._parser
    "ConfigParser",
    "OptionsSection",
    # from ._pipeline
    "DEFAULT_CONFIG_NAME",
    "PipelineConfig",
    "load_config",
    # from ._values
    "ValueParser",
    "IntValue",
    "FloatValue",
    "StrValue",
    "BoolValue",
    "EnumValue",
]
