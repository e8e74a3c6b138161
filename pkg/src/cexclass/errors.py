# Copyright 2025 firefly
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Core exceptions and logging helpers for cexclass."""

import functools
import logging
from pathlib import Path
from typing import TYPE_CHECKING, Any, Callable, Optional

if TYPE_CHECKING:
    from .kernel import Trace

INSUFFICIENT_MESSAGE = "V cannot sufficiently characterize the violation"


def log(logger_instance: logging.Logger, module: str, level: str, operation: str, message: str, file_path: Optional[Path] = None) -> None:
    """Log message with standardized format."""
    file_info = f" in file {file_path}" if file_path else ""
    getattr(logger_instance, level)(f"[{module}] {operation}: {message}{file_info}")


def log_errors(logger: logging.Logger, component: str, action: str) -> Callable:
    """Decorator to log errors and re-raise.

    Args:
        logger: Logger instance to use for logging
        component: Component name for log message
        action: Action being performed for log message

    Example:
        ```python
        @log_errors(logger, "Verifier", "verify")
        def verify(...):
            ...
        ```
    """
    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(*args, **kwargs) -> Any:
            try:
                return func(*args, **kwargs)
            except Exception as e:
                log(logger, component, "error", action, str(e))
                raise
        return wrapper
    return decorator


class CexClassError(Exception):
    """Base exception for all cexclass errors."""


class ParseError(CexClassError):
    """Error in model, predicate or constraint source text."""

    def __init__(self, message: str, line: int = 1, column: int = 1, token: str = ""):
        self.message = message
        self.line = line
        self.column = column
        self.token = token
        near = f" (near {token!r})" if token else ""
        super().__init__(f"{line}:{column}: {message}{near}")

    @property
    def location(self) -> tuple[int, int]:
        return self.line, self.column


class EvaluationError(CexClassError):
    """Expression could not be evaluated; signals a malformed model."""


class ConfigError(CexClassError):
    """Invalid run configuration or unresolved name."""


class CorpusError(CexClassError):
    """Error loading bundled corpus assets."""


class InvariantBreach(CexClassError):
    """An internal contract was violated."""


class ClassifyError(CexClassError):
    """Classification could not be completed.

    Attributes:
        kind: Short machine-readable reason
        trace: Offending counterexample, when there is one
        capped: Whether fact generation was truncated by the arity/window caps
    """

    kind = "classify-error"

    def __init__(self, message: str, trace: Optional["Trace"] = None, capped: bool = False):
        self.trace = trace
        self.capped = capped
        super().__init__(message)


class InsufficientPredicates(ClassifyError):
    """The constraint built from Γ does not guarantee a violation."""

    kind = "insufficient-predicates"

    def __init__(self, trace: "Trace", capped: bool = False, detail: str = ""):
        message = f"{INSUFFICIENT_MESSAGE} in {trace}"
        if detail:
            message += f" ({detail})"
        if capped:
            message += "; fact generation was capped, so no solution is not proven"
        super().__init__(message, trace, capped)


class InsufficientFacts(InsufficientPredicates):
    """No predicate of V holds anywhere on the counterexample."""

    kind = "insufficient-facts"

    def __init__(self, trace: "Trace", capped: bool = False):
        super().__init__(trace, capped, detail="no fact of V holds on it")


class NoAcceptingTrace(ClassifyError):
    """Every bounded trace violates the property."""

    kind = "no-accepting-trace"
