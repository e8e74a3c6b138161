"""Tests for the error hierarchy and logging helpers."""

import logging

import pytest

from cexclass.errors import (
    INSUFFICIENT_MESSAGE,
    CexClassError,
    ClassifyError,
    ConfigError,
    CorpusError,
    InsufficientFacts,
    InsufficientPredicates,
    InvariantBreach,
    NoAcceptingTrace,
    ParseError,
    log,
    log_errors,
)
from cexclass.kernel import Trace

logger = logging.getLogger("cexclass.tests")


def test_hierarchy():
    """Every package error derives from CexClassError; empty Γ is a case of insufficient predicates."""
    for error in (ParseError, ConfigError, CorpusError, ClassifyError, InvariantBreach):
        assert issubclass(error, CexClassError)
    assert issubclass(InsufficientFacts, InsufficientPredicates)
    assert issubclass(InsufficientPredicates, ClassifyError)
    assert issubclass(NoAcceptingTrace, ClassifyError)
    assert not issubclass(InvariantBreach, ClassifyError)


def test_parse_error_location():
    error = ParseError("unexpected token", line=3, column=7, token="@")
    assert error.location == (3, 7)
    assert "3:7" in str(error)
    assert "unexpected token" in str(error)


def test_insufficient_predicates_message():
    trace = Trace.of({"a": 1}, {"a": 0})
    error = InsufficientPredicates(trace)
    assert str(error).startswith(INSUFFICIENT_MESSAGE)
    assert error.trace is trace
    assert error.kind == "insufficient-predicates"
    assert "capped" not in str(error)
    assert "capped" in str(InsufficientPredicates(trace, capped=True))


def test_insufficient_facts():
    error = InsufficientFacts(Trace.of({"a": 1}))
    assert error.kind == "insufficient-facts"
    assert str(error).startswith(INSUFFICIENT_MESSAGE)


def test_log_format(caplog):
    with caplog.at_level(logging.INFO, logger="cexclass.tests"):
        log(logger, "Verifier", "info", "verify", "explored 3 nodes")
    assert "[Verifier] verify: explored 3 nodes" in caplog.text


def test_log_errors_reraises(caplog):
    """The decorator logs the failure and lets it propagate."""
    @log_errors(logger, "Corpus", "load")
    def broken():
        raise CorpusError("no such model")

    with caplog.at_level(logging.ERROR, logger="cexclass.tests"):
        with pytest.raises(CorpusError):
            broken()
    assert "no such model" in caplog.text
