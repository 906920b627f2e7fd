"""Error taxonomy.

Every error carries a ``category`` string and a ``context`` dict so the CLI can
emit ``{category, message, context}`` without knowing the concrete class.
"""

from __future__ import annotations

from typing import Any


class AdjSurvError(Exception):
    category = "error"
    #: CLI exit status for this class of failure
    exit_code = 1

    def __init__(self, message: str, **context: Any) -> None:
        super().__init__(message)
        self.message = message
        self.context = context

    def to_dict(self) -> dict:
        return {"category": self.category, "message": self.message,
                "context": self.context}


class UsageError(AdjSurvError):
    category = "usage"
    exit_code = 2


class ConfigurationError(AdjSurvError):
    category = "configuration"
    exit_code = 2


class BindingError(AdjSurvError):
    category = "binding"
    exit_code = 2


class ParseError(AdjSurvError):
    category = "parse"
    exit_code = 2


class ValidationError(AdjSurvError):
    category = "validation"
    exit_code = 2


class DomainError(AdjSurvError, ValueError):
    category = "domain"
    exit_code = 2


class RangeError(AdjSurvError, ValueError):
    category = "range"
    exit_code = 2


class SchemaError(AdjSurvError):
    category = "schema"


class UnsupportedMethodError(AdjSurvError):
    category = "unsupported_method"
    exit_code = 2


class CapabilityError(AdjSurvError):
    category = "capability"
    exit_code = 2


class DegenerateInputError(AdjSurvError):
    category = "degenerate_input"


class ConvergenceError(AdjSurvError):
    category = "convergence"


class LinearAlgebraError(AdjSurvError):
    category = "linear_algebra"


class PositivityError(AdjSurvError):
    category = "positivity"


class EstimabilityError(AdjSurvError):
    category = "estimability"


class InstabilityError(AdjSurvError):
    category = "instability"


class StrataTypeError(AdjSurvError):
    category = "type"
    exit_code = 2
