"""Tests for the run configuration and report rendering."""

import json
from pathlib import Path

import pytest
from pydantic import ValidationError

from cexclass.classify import classify
from cexclass.constants import DEFAULT_EQ_WINDOW, DEFAULT_MAX_ARITY
from cexclass.errors import InsufficientFacts
from cexclass.factgen import FactConfig
from cexclass.kernel import Trace
from cexclass.report import ErrorView, Report, RunConfig, TraceView
from cexclass.verifier import Bound, VerifierStats


class TestRunConfig:
    def test_defaults(self):
        cfg = RunConfig(corpus="counter")
        assert cfg.trace_bound == Bound(2)
        assert cfg.fact_config == FactConfig()
        assert cfg.output_format == "text"
        assert cfg.witnesses

    def test_aliases(self):
        cfg = RunConfig.model_validate({"corpus": "counter", "property": "StaysAtOne", "format": "structured"})
        assert cfg.property_name == "StaysAtOne"
        assert cfg.output_format == "structured"
        assert cfg.echo()["property"] == "StaysAtOne"
        assert cfg.echo()["format"] == "structured"

    def test_exact_bound(self):
        cfg = RunConfig(model=Path("m.ccm"), bound=3, exact_length=True, max_arity=2, eq_window=None)
        assert cfg.trace_bound == Bound(3, exact=True)
        assert cfg.fact_config == FactConfig(max_arity=2, eq_window=None)
        assert cfg.echo()["model"] == "m.ccm"

    @pytest.mark.parametrize("values", [
        {},
        {"corpus": "counter", "model": "m.ccm"},
        {"corpus": "counter", "bound": -1},
        {"corpus": "counter", "max_arity": 0},
        {"corpus": "counter", "eq_window": 0},
        {"corpus": "counter", "format": "xml"},
        {"corpus": "counter", "colour": "red"},
    ])
    def test_invalid(self, values):
        with pytest.raises(ValidationError):
            RunConfig.model_validate(values)


class TestViews:
    def test_trace_view(self):
        trace = Trace.of({"a": 1, "seen": frozenset({"B", "A"}), "ok": True})
        view = TraceView.of(trace)
        assert view.states == [{"a": 1, "seen": ["A", "B"], "ok": True}]
        assert view.render() == ["    0: a=1, seen={A, B}, ok=true"]

    def test_error_view(self):
        error = InsufficientFacts(Trace.of({"a": 1}, {"a": 2}))
        view = ErrorView.of(error)
        assert view.kind == "insufficient-facts"
        assert view.trace.states == [{"a": 1}, {"a": 2}]
        assert ErrorView.of(ValueError("bad")).kind == "ValueError"


@pytest.fixture
def counter_report(counter_model):
    preds = [counter_model.predicates["lessThanOne"], counter_model.predicates["greaterThanOne"]]
    stats = VerifierStats()
    result = classify(counter_model.system, counter_model.get_property("StaysAtOne"), preds, Bound(2), stats=stats)
    return Report.of_classification(RunConfig(corpus="counter", bound=2), result, stats, elapsed=0.5, counterexamples=10)


def test_classification_report(counter_report):
    assert counter_report.ok
    assert [c.constraint for c in counter_report.classes] == ["exists i1 : lessThanOne[a@i1]", "exists i1 : greaterThanOne[a@i1]"]
    assert counter_report.summary.classes == 2
    assert counter_report.summary.discovered == 2
    assert counter_report.summary.counterexamples == 10
    assert counter_report.summary.verifier_calls > 0
    assert counter_report.summary.other_ms >= 0.0


def test_structured_and_text_agree(counter_report):
    """Every field of the structured document also appears in the text form."""
    data = json.loads(counter_report.to_json())
    text = counter_report.to_text()
    lines = text.splitlines()
    assert data["schema_version"] == "1.0"
    assert f"schema version: {data['schema_version']}" in lines
    assert data["command"] == "classify"
    assert lines[0].startswith("classify: counter,")
    assert data["config"]["corpus"] == "counter"
    expected_config = {
        "model": "none",
        "corpus": "counter",
        "property": "none",
        "predicates": "[]",
        "bound": "2",
        "exact_length": "no",
        "max_arity": str(DEFAULT_MAX_ARITY),
        "eq_window": str(DEFAULT_EQ_WINDOW),
        "seed": "none",
        "witnesses": "yes",
        "format": "text",
        "out": "none",
    }
    assert set(data["config"]) == set(expected_config)
    for key, rendered in expected_config.items():
        assert f"  {key}: {rendered}" in lines, key
    for view, cls in zip(counter_report.classes, data["classes"]):
        assert f"class {cls['index']}: {cls['constraint']}" in lines
        for line in view.representative.render():
            assert line in text
        for line in view.canonical_witness.render():
            assert line in text
    summary = data["summary"]
    assert f"classes: {summary['classes']} (discovered {summary['discovered']}, removed {len(summary['removed'])})" in lines
    assert f"counterexamples at bound: {summary['counterexamples']}" in lines
    assert "fact generation capped: no" in lines
    assert f"time: verifier {summary['verifier_ms']:.1f} ms over {summary['verifier_calls']} calls, other {summary['other_ms']:.1f} ms" in lines
    assert data["error"] is None
    assert not any(line.startswith("error") for line in lines)


def test_render_switches_format(counter_report):
    assert counter_report.render("text") == counter_report.to_text()
    assert json.loads(counter_report.render("structured"))["summary"]["classes"] == 2
