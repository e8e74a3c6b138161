"""Tests for the model language, frontmatter, libraries and constraint syntax."""

import pytest

from cexclass.constants import CORPUS_NAMES
from cexclass.errors import ConfigError, ParseError
from cexclass.factgen import BUILTINS, AtomicFact, ConstArg, PosArg, VarAt
from cexclass.kernel import Domain, State, Trace
from cexclass.parser import (
    format_expr,
    format_model,
    parse_constraint,
    parse_constraints,
    parse_frontmatter,
    parse_library,
    parse_model,
    parse_predicate,
    tokenize,
)


class TestTokenize:
    def test_aliases_are_canonicalised(self):
        """Alternative spellings produce the same token values."""
        values = [t.value for t in tokenize("a /\\ b ∧ c && d ≠ e ⇒ f")][:-1]
        assert values == ["a", "and", "b", "and", "c", "and", "d", "!=", "e", "implies", "f"]

    def test_not_in_is_one_token(self):
        tokens = tokenize("x not in s")
        assert [t.value for t in tokens][:3] == ["x", "notin", "s"]

    def test_comments_and_positions(self):
        tokens = tokenize("-- heading\n  a' = 1")
        assert tokens[0].value == "a"
        assert (tokens[0].line, tokens[0].column) == (2, 3)
        assert tokens[-1].kind == "eof"

    def test_unexpected_character(self):
        with pytest.raises(ParseError) as excinfo:
            tokenize("a = #")
        assert excinfo.value.location == (1, 5)

    def test_double_minus_after_operand(self):
        """Only `--` at the start of a line or after whitespace opens a comment."""
        assert [t.value for t in tokenize("a--1 -- note")][:-1] == ["a", "-", "-", "1"]


class TestFrontmatter:
    def test_split(self):
        metadata, body = parse_frontmatter("---\nname: demo\nbound: 3\n---\nmodel M\n")
        assert metadata == {"name": "demo", "bound": 3}
        assert body == "model M\n"

    def test_absent(self):
        assert parse_frontmatter("model M\n") == ({}, "model M\n")

    def test_empty_block(self):
        metadata, body = parse_frontmatter("---\n\n---\nmodel M")
        assert metadata == {}
        assert body == "model M"

    @pytest.mark.parametrize("text", [
        "---\nkey: [unclosed\n---\nmodel M",
        "---\n- a\n- b\n---\nmodel M",
    ])
    def test_invalid(self, text):
        """Malformed YAML and non-mapping blocks are parse errors."""
        with pytest.raises(ParseError):
            parse_frontmatter(text)


class TestModels:
    def test_counter(self, counter_model):
        assert counter_model.name == "Counter"
        assert counter_model.system.domains == {"a": Domain.integer(-3, 3)}
        assert list(counter_model.properties) == ["StaysAtOne"]
        assert list(counter_model.predicates) == ["lessThanOne", "greaterThanOne"]
        assert counter_model.var_types == {"a": "int[-3..3]"}

    def test_records_are_flattened(self, running_entry):
        model = running_entry.model
        assert model.system.var_names == ("EveKey", "EveSeenSecret", "msg.type", "msg.sender", "msg.secret")
        assert set(model.record_vars) == {"msg"}
        assert model.types["MsgType"].symbols == ("None", "Plaintext", "Encrypted")
        assert model.system.initial_states() == (State({
            "EveKey": "NoKey",
            "EveSeenSecret": False,
            "msg.type": "None",
            "msg.sender": "Alice",
            "msg.secret": False,
        }),)

    def test_record_equality_expands_fieldwise(self):
        model = parse_model("""
record R { x: bool, y: bool }
vars
  r: R
trans
  r' = r
""")
        state = State({"r.x": True, "r.y": False})
        assert model.system.successors(state) == (state,)

    def test_sets_and_conditionals(self):
        model = parse_model("""
type Item = {A, B}
vars
  seen: set of Item
  flag: bool
init
  seen = {}; flag = false
trans
  seen' = (if flag then seen union {B} else seen union {A});
  flag' = not flag
invariant NoB: B not in seen
""")
        prop = model.get_property("NoB")
        first = model.system.initial_states()[0]
        assert first["seen"] == frozenset()
        (second,) = model.system.successors(first)
        assert second == State(seen=frozenset({"A"}), flag=True)
        (third,) = model.system.successors(second)
        assert third["seen"] == frozenset({"A", "B"})
        assert not prop.holds_at(third)

    def test_property_lookup(self, counter_model):
        assert counter_model.get_property("true").satisfied_by(Trace.of({"a": 1}, {"a": 2}))
        with pytest.raises(ConfigError):
            counter_model.get_property("Missing")

    def test_frontmatter_is_kept_as_metadata(self, counter_source):
        model = parse_model("---\nproperty: StaysAtOne\nbound: 2\n---\n" + counter_source)
        assert model.metadata == {"property": "StaysAtOne", "bound": 2}
        assert model.signature() == parse_model(counter_source).signature()

    @pytest.mark.parametrize("name", CORPUS_NAMES)
    def test_round_trip(self, bundled, name):
        """Pretty-printing a model and parsing it again gives the same structure."""
        model = bundled.load(name).model
        assert parse_model(format_model(model)).signature() == model.signature()


class TestModelErrors:
    @pytest.mark.parametrize("source, fragment", [
        ("", "empty model"),
        ("init\n  true", "no variables"),
        ("vars\n  a: int", "range"),
        ("vars\n  a: bool\n  a: bool", "duplicate variable"),
        ("vars\n  a: bool\ninit\n  a = 1", "type mismatch"),
        ("vars\n  a: bool\ninit\n  a' = true", "only allowed in trans"),
        ("vars\n  a: int[0..3]\ninit\n  a < 1 < 2", "chained"),
        ("vars\n  a: Colour", "unknown type"),
        ("vars\n  a: bool\npred p[x: bool] { a }", "needs a position"),
        ("vars\n  a: bool\ninvariant P: a\ninvariant P: a", "duplicate invariant"),
        ("vars\n  a: int[0..1]\ntrans\n  a' = a + true", "type mismatch"),
        ("vars\n  a:", "end of input"),
        ("vars\n  a: bool\ninit\n  a < 1 <", "end of input"),
    ])
    def test_rejected(self, source, fragment):
        with pytest.raises(ParseError) as excinfo:
            parse_model(source)
        assert fragment in str(excinfo.value)

    def test_error_location(self):
        """Errors point at the offending token."""
        with pytest.raises(ParseError) as excinfo:
            parse_model("vars\n  a: int[0..1]\ninit\n  b = 1\n")
        assert excinfo.value.location == (4, 3)
        assert excinfo.value.token == "b"

    def test_syntax_error_location(self):
        with pytest.raises(ParseError) as excinfo:
            parse_model("vars\n  a: bool\ninit\n  a = ;\n")
        assert excinfo.value.location == (4, 7)
        assert excinfo.value.token == ";"
        assert str(excinfo.value).startswith("4:7: expected")

    @pytest.mark.parametrize("update", ["x - -1", "x--1"])
    def test_double_minus_is_subtraction(self, update):
        """`--` right after an operand is two minus signs, not a comment."""
        model = parse_model(f"vars\n  x: int[0..3]\ninit\n  x = 1\ntrans\n  x' = {update} -- one up\n")
        (state,) = model.system.initial_states()
        assert model.system.successors(state) == (State(x=2),)

    def test_error_location_counts_frontmatter_lines(self):
        source = "---\nname: m\n---\nvars\n  a: int[0..1]\ninit\n  b = 1\n"
        with pytest.raises(ParseError) as excinfo:
            parse_model(source)
        assert excinfo.value.location == (7, 3)


class TestPredicates:
    def test_parse_predicate(self, counter_model):
        pred = parse_predicate("pred small[x: int] { x < 2 }", counter_model)
        assert pred.name == "small"
        assert pred.arity == 1
        assert pred.params[0].accepts_var("a", counter_model.schema)
        assert format_expr(pred.body) == "x < 2"

    def test_positional_predicate(self, running_entry):
        pred = parse_predicate("pred leak[t: pos] { msg.secret@t = true }", running_entry.model)
        assert pred.is_positional

    def test_builtin_names_are_reserved(self, counter_model):
        with pytest.raises(ParseError):
            parse_predicate("pred true[x: int] { x < 2 }", counter_model)

    def test_library(self, bundled):
        model = bundled.load("nsp-symmetric").model
        library = parse_library(bundled.root.joinpath("security.ccp").read_text(encoding="utf-8"), model)
        assert library.name == "security"
        assert library.builtins == ()
        assert list(library.predicates) == ["replay", "manInTheMiddle"]
        assert all(p.is_positional for p in library.members())

    def test_library_builtins(self, counter_model):
        library = parse_library('---\nname: g\nbuiltins: ["=", "≠", "<"]\n---\n', counter_model)
        assert [p.name for p in library.members()] == ["=", "!=", "<"]

    def test_library_unknown_builtin(self, counter_model):
        with pytest.raises(ParseError):
            parse_library("---\nbuiltins: [\"~\"]\n---\n", counter_model)


class TestConstraintSyntax:
    @pytest.mark.parametrize("text", [
        "exists i1 : lessThanOne[a@i1]",
        "exists i1 : a@i1 != 1",
        "exists i1,i2 : a@i1 = a@i2 /\\ i1 < i2",
        "exists i1,i2 : greaterThanOne[a@i2] /\\ a@i1 = 0 /\\ i1 < i2",
        "true",
    ])
    def test_render_parse_agree(self, counter_model, text):
        """Canonical renderings parse back to constraints that render identically."""
        constraint = parse_constraint(text, counter_model.predicates, counter_model.schema)
        assert constraint.render() == text

    def test_structure(self, counter_model):
        constraint = parse_constraint("exists i1,i2 : a@i1 = a@i2 /\\ i1 < i2", counter_model.predicates, counter_model.schema)
        assert constraint.position_vars == 2
        assert constraint.conjuncts == (
            AtomicFact(BUILTINS["="], (VarAt("a", 0), VarAt("a", 1))),
            AtomicFact(BUILTINS["<"], (PosArg(0), PosArg(1))),
        )
        single = parse_constraint("exists i1 : a@i1 = 3", counter_model.predicates, counter_model.schema)
        assert single.conjuncts[0].args[1] == ConstArg(3)

    @pytest.mark.parametrize("text, fragment", [
        ("exists i1 : unknown[a@i1]", "unknown predicate"),
        ("exists i1 : b@i1 = 1", "unknown variable"),
        ("exists i1 : a@i2 = 1", "undeclared position"),
        ("exists i1 : a@i1 = 9", "type mismatch"),
        ("exists i1,i1 : a@i1 = 1", "duplicate position"),
    ])
    def test_rejected(self, counter_model, text, fragment):
        with pytest.raises(ParseError) as excinfo:
            parse_constraint(text, counter_model.predicates, counter_model.schema)
        assert fragment in str(excinfo.value)

    def test_constraint_file(self, counter_model):
        text = "-- blocked classes\nexists i1 : lessThanOne[a@i1]\n\nexists i1 : greaterThanOne[a@i1]\n"
        constraints = parse_constraints(text, counter_model.predicates, counter_model.schema)
        assert [c.render() for c in constraints] == ["exists i1 : lessThanOne[a@i1]", "exists i1 : greaterThanOne[a@i1]"]

    def test_constraint_file_reports_line(self, counter_model):
        with pytest.raises(ParseError) as excinfo:
            parse_constraints("exists i1 : a@i1 = 1\nexists i1 : nope[a@i1]\n", counter_model.predicates, counter_model.schema)
        assert excinfo.value.location[0] == 2

