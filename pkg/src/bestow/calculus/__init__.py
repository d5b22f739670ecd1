"""The actor calculus: syntax, typing, small-step semantics, invariants and exploration."""

from .ast import Variant
from .explorer import ExplorationReport, Trace, Violation, check_atomicity, check_drf, check_progress, explore
from .mutants import MUTANTS
from .parser import ParseError, VariantError, parse, pretty, split_pragma
from .runner import Schedule, run_program
from .semantics import Config, Semantics, apply, enabled, initial_config, parse_label, reference
from .statics import CalcTypeError, ErrorKind, typecheck
from .wf import check_wf

__all__ = [
    "MUTANTS",
    "CalcTypeError",
    "Config",
    "ErrorKind",
    "ExplorationReport",
    "ParseError",
    "Schedule",
    "Semantics",
    "Trace",
    "Variant",
    "VariantError",
    "Violation",
    "apply",
    "check_atomicity",
    "check_drf",
    "check_progress",
    "check_wf",
    "enabled",
    "explore",
    "initial_config",
    "parse",
    "parse_label",
    "pretty",
    "reference",
    "run_program",
    "split_pragma",
    "typecheck",
]
