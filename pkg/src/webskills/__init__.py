"""Polymorphic web-skill libraries learned on deterministic simulated websites."""

from .dsl import parse_skill_file, parse_statement, format_skill_file, format_statement
from .library import SkillLibrary, empty_library, expand, resolve, validate_library

__version__ = "0.1.0"

__all__ = [
    "SkillLibrary",
    "empty_library",
    "expand",
    "format_skill_file",
    "format_statement",
    "parse_skill_file",
    "parse_statement",
    "resolve",
    "validate_library",
]
