"""
ERROR HANDLING
==============
Exception hierarchy and exit-code mapping for the command line.

FLOW:
- Library code raises one of the HeisenwaveError subclasses.
- register_error_handlers() wraps a dispatch callable and turns those
  exceptions into exit codes 0/1/2 with a one-line message.

HOW:
- Each class carries its exit code; unexpected exceptions are logged with a
  traceback and reported with a generic message.
"""

from __future__ import annotations

import logging
import sys
import traceback
from typing import Any, Callable, Sequence

EXIT_OK = 0
EXIT_VERDICT_FAILED = 1
EXIT_CONFIGURATION = 2


class HeisenwaveError(Exception):
    exit_code = EXIT_CONFIGURATION
    title = "Run failed"


class InputError(HeisenwaveError, ValueError):
    title = "Invalid input"


class DomainError(InputError):
    title = "Hypothesis violated"


class NonFiniteValues(InputError):
    title = "Non-finite values"


class ConfigurationError(HeisenwaveError):
    title = "Configuration error"


class ConsistencyError(HeisenwaveError):
    exit_code = EXIT_VERDICT_FAILED
    title = "Numerical self-check failed"


class NonContractionError(HeisenwaveError):
    exit_code = EXIT_VERDICT_FAILED
    title = "Fixed-point iteration did not contract"

    def __init__(self, message: str, epsilon: float | None = None, diffs: Sequence[float] = ()):
        super().__init__(message)
        self.epsilon = epsilon
        self.diffs = list(diffs)


class VerdictFailure(HeisenwaveError):
    exit_code = EXIT_VERDICT_FAILED
    title = "Verification verdict failed"


def error_title(exit_code: int) -> str:
    if exit_code == EXIT_OK:
        return "Run complete"
    if exit_code == EXIT_VERDICT_FAILED:
        return "Verification failed"
    if exit_code == EXIT_CONFIGURATION:
        return "Configuration error"
    return "Run failed"


def error_reason(exit_code: int) -> str:
    if exit_code == EXIT_VERDICT_FAILED:
        return "At least one verdict was false or a numerical self-check failed."
    if exit_code == EXIT_CONFIGURATION:
        return "The configuration or input data could not be used."
    return "The run hit an unexpected condition."


def _detail_from_exc(exc: BaseException, fallback: str) -> str:
    text = str(exc).strip()
    return text or fallback


def register_error_handlers(
    dispatch: Callable[..., int],
    logger: logging.Logger | None = None,
    stream: Any = None,
) -> Callable[..., int]:
    """Wrap a dispatch function so every failure ends as an exit code."""
    log = logger or logging.getLogger("heisenwave.errors")

    def handled(*args, **kwargs) -> int:
        out = stream or sys.stderr
        try:
            return int(dispatch(*args, **kwargs))
        except HeisenwaveError as exc:
            code = exc.exit_code
            detail = _detail_from_exc(exc, error_reason(code))
            log.warning("event=run_error kind=%s exit_code=%s detail=%s", type(exc).__name__, code, detail)
            print(f"{error_title(code)}: {exc.title}: {detail}", file=out)
            return code
        except Exception as exc:  # noqa: BLE001
            log.error("event=unhandled_error kind=%s\n%s", type(exc).__name__, traceback.format_exc())
            print(f"{error_title(-1)}: {error_reason(-1)}", file=out)
            return EXIT_CONFIGURATION

    return handled
