"""Tests for the bundled corpus and the results recorded in its frontmatter."""

import time

import pytest

from cexclass import errors
from cexclass.classify import classify
from cexclass.constants import CORPUS_NAMES
from cexclass.corpus import Corpus, Expectation, default_corpus, load_corpus, resolve_predicates
from cexclass.errors import ConfigError, CorpusError
from cexclass.factgen import BUILTINS
from cexclass.tracecon import implies_violation
from cexclass.verifier import Bound, count_counterexamples

# The protocol models take minutes; run them alone with `pytest -m nsp`.
SECONDS = {"nsp-symmetric": 600.0, "nsp-public-key": 600.0}

EXPECTED = [
    pytest.param(entry.name, index, id=f"{entry.name}-{index}",
                 marks=[pytest.mark.nsp, pytest.mark.slow] if entry.name in SECONDS else [])
    for entry in Corpus()
    for index in range(len(entry.expected))
]

COUNTS = [
    pytest.param(entry.name, bound, count, id=f"{entry.name}-{bound}",
                 marks=[pytest.mark.nsp] if entry.name in SECONDS else [])
    for entry in Corpus()
    for bound, count in entry.counterexamples.items()
]


class TestLoader:
    def test_names(self, bundled):
        assert set(bundled.names) == set(CORPUS_NAMES)
        assert bundled.library_names == ("generic", "security")
        assert len(bundled) == len(CORPUS_NAMES)
        assert "counter" in bundled
        assert "missing" not in bundled

    def test_entry(self, counter_entry):
        assert counter_entry.name == "counter"
        assert counter_entry.property_name == "StaysAtOne"
        assert counter_entry.predicates == ("lessThanOne", "greaterThanOne")
        assert counter_entry.bound == 2
        assert counter_entry.counterexamples == {1: 2, 2: 10}
        assert counter_entry.invariant.name == "StaysAtOne"
        assert counter_entry.description.startswith("A single integer")
        assert [p.name for p in counter_entry.predicate_set()] == ["lessThanOne", "greaterThanOne"]

    def test_entries_are_cached(self, bundled):
        assert bundled.load("counter") is bundled.load("counter")
        assert load_corpus("counter") is default_corpus().load("counter")

    def test_unknown_name(self, bundled):
        assert bundled.get("missing") is None
        with pytest.raises(CorpusError) as excinfo:
            bundled.load("missing")
        assert "counter" in str(excinfo.value)

    def test_iteration(self, bundled):
        assert sorted(entry.name for entry in bundled) == sorted(CORPUS_NAMES)


class TestCustomDirectory:
    def test_broken_model_is_skipped(self, tmp_path, counter_source, caplog):
        (tmp_path / "good.ccm").write_text("---\nproperty: StaysAtOne\n---\n" + counter_source)
        (tmp_path / "broken.ccm").write_text("vars\n  a: int[0..1]\ninit\n  b = 1\n")
        corpus = Corpus(tmp_path)
        assert corpus.names == ("broken", "good")
        assert [entry.name for entry in corpus] == ["good"]
        assert "Failed to load broken" in caplog.text
        with pytest.raises(CorpusError) as excinfo:
            corpus.load("broken")
        assert "broken.ccm" in str(excinfo.value)

    def test_unknown_property(self, tmp_path, counter_source):
        (tmp_path / "wrong.ccm").write_text("---\nproperty: Missing\n---\n" + counter_source)
        with pytest.raises(CorpusError):
            Corpus(str(tmp_path)).load("wrong")

    def test_default_property_is_the_first_invariant(self, tmp_path, counter_source):
        (tmp_path / "plain.ccm").write_text(counter_source)
        entry = Corpus(tmp_path).load("plain")
        assert entry.property_name == "StaysAtOne"
        assert entry.expected == ()

    def test_missing_directory(self, tmp_path):
        with pytest.raises(CorpusError):
            Corpus(tmp_path / "nowhere").names


class TestExpectation:
    def test_from_metadata(self):
        expectation = Expectation.from_metadata({"predicates": ["=", "<"], "bound": 3, "classes": 2, "seed": "p"})
        assert expectation == Expectation(("=", "<"), 3, classes=2, seed="p")

    @pytest.mark.parametrize("data", [
        {"bound": 2},
        {"bound": 2, "classes": 1, "error": "InsufficientPredicates"},
        {"classes": 1},
        {"bound": "two", "classes": 1},
        ["bound", 2],
        {"bound": 2, "classes": 1, "predicates": 3},
    ])
    def test_invalid(self, data):
        with pytest.raises(CorpusError):
            Expectation.from_metadata(data)


class TestResolvePredicates:
    def test_builtins_and_aliases(self, counter_model):
        assert resolve_predicates(["=", "≠", "<", "⊤"], counter_model) == [BUILTINS[n] for n in ("=", "!=", "<", "true")]

    def test_library_expands_to_its_members(self, counter_model):
        assert resolve_predicates(["generic"], counter_model) == [BUILTINS["="], BUILTINS["<"]]

    def test_order_kept_and_repeats_dropped(self, counter_model):
        names = [p.name for p in resolve_predicates(["greaterThanOne", "<", "generic", "greaterThanOne"], counter_model)]
        assert names == ["greaterThanOne", "<", "="]

    def test_library_predicate(self, bundled):
        model = bundled.load("nsp-public-key").model
        names = [p.name for p in resolve_predicates(["generic", "manInTheMiddle"], model, bundled)]
        assert names == ["=", "<", "manInTheMiddle"]

    def test_library_that_does_not_apply(self, counter_model):
        """The security predicates need the message record, which the counter lacks."""
        with pytest.raises(ConfigError):
            resolve_predicates(["replay"], counter_model)

    def test_unknown(self, counter_model):
        with pytest.raises(ConfigError) as excinfo:
            resolve_predicates(["nope"], counter_model)
        assert "nope" in str(excinfo.value)


@pytest.mark.parametrize("name, bound, count", COUNTS)
def test_recorded_counts(bundled, name, bound, count):
    entry = bundled.load(name)
    assert count_counterexamples(entry.model.system, entry.invariant, Bound(bound)) == count


@pytest.mark.parametrize("name, index", EXPECTED)
def test_recorded_classifications(bundled, name, index):
    """Classifying each bundled model reproduces the results in its frontmatter."""
    entry = bundled.load(name)
    expectation = entry.expected[index]
    model, prop = entry.model, entry.invariant
    preds = entry.predicate_set(expectation.predicates)
    seed = entry.predicate_set([expectation.seed])[0] if expectation.seed else None

    if expectation.error:
        with pytest.raises(getattr(errors, expectation.error)):
            classify(model.system, prop, preds, Bound(expectation.bound), schema=model.schema, seed=seed)
        return

    started = time.perf_counter()
    result = classify(model.system, prop, preds, Bound(expectation.bound), schema=model.schema, seed=seed)
    assert time.perf_counter() - started < SECONDS.get(name, 30.0)
    rendered = [w.render() for w in result.constraints]
    assert len(result) == expectation.classes
    assert set(expectation.constraints) <= set(rendered)
    for w in result.constraints:
        assert implies_violation(model.system, w, prop, Bound(expectation.bound))
