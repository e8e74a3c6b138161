"""Tests for domains, states, traces, expression evaluation and transition systems."""

import pytest

from cexclass.errors import EvaluationError
from cexclass.kernel import (
    BinOp,
    Const,
    Domain,
    Ite,
    Not,
    Property,
    SetLit,
    State,
    SymbolicTransitionSystem,
    Trace,
    Var,
    VarDecl,
    eval_state,
    eval_transition,
    evaluate,
    render_value,
)

from .utils import all_states, brute_traces


def test_domain_value_order():
    """Values come out in canonical order for every kind of domain."""
    assert Domain.boolean().values == (False, True)
    assert Domain.integer(-1, 2).values == (-1, 0, 1, 2)
    assert Domain.enum(["B", "A"]).values == ("B", "A")
    assert Domain.set_of(["x", "y"]).values == (
        frozenset(),
        frozenset({"x"}),
        frozenset({"y"}),
        frozenset({"x", "y"}),
    )


@pytest.mark.parametrize("factory, args", [
    (Domain.integer, (3, 1)),
    (Domain.enum, ([],)),
    (Domain.enum, (["A", "A"],)),
    (Domain.set_of, ([f"s{i}" for i in range(9)],)),
])
def test_invalid_domains(factory, args):
    """Empty ranges, empty or duplicated enumerations and oversized sets are rejected."""
    with pytest.raises(ValueError):
        factory(*args)


def test_domain_contains_keeps_bool_and_int_apart():
    ints = Domain.integer(0, 1)
    assert ints.contains(1)
    assert not ints.contains(True)
    assert not Domain.boolean().contains(0)
    assert Domain.set_of(["a", "b"]).contains(frozenset({"a"}))
    assert not Domain.set_of(["a", "b"]).contains(frozenset({"c"}))


def test_domain_equality_ignores_type_name():
    assert Domain.enum(["A", "B"], name="T") == Domain.enum(["A", "B"], name="U")
    assert Domain.enum(["A", "B"]) != Domain.enum(["B", "A"])


def test_render_value():
    assert render_value(True) == "true"
    assert render_value(-2) == "-2"
    assert render_value(frozenset({"b", "a"})) == "{a, b}"
    assert render_value(frozenset()) == "{}"


def test_state_mapping_and_rendering():
    """States iterate in construction order and compare by content."""
    state = State({"b": True, "a": 1})
    assert list(state) == ["b", "a"]
    assert str(state) == "(b=true, a=1)"
    assert state == State(b=True, a=1)
    assert hash(state) == hash(State(a=1, b=True))
    assert state.to_dict() == {"b": True, "a": 1}


def test_trace_basics():
    trace = Trace.of({"a": 1}, {"a": 2})
    assert trace.length == 1
    assert list(trace.positions) == [0, 1]
    assert trace[1]["a"] == 2
    assert str(trace) == "(a=1) -> (a=2)"
    assert trace.extend(State(a=3)).length == 2
    with pytest.raises(ValueError):
        Trace(())


class TestEvaluation:
    """Three-valued evaluation."""

    def unknown(self, node):
        return None

    def test_kleene_connectives(self):
        """A definite operand decides and/or even when the other is unknown."""
        x = Var("x")
        assert evaluate(BinOp("and", Const(False), x), self.unknown) is False
        assert evaluate(BinOp("or", x, Const(True)), self.unknown) is True
        assert evaluate(BinOp("and", Const(True), x), self.unknown) is None
        assert evaluate(BinOp("implies", Const(False), x), self.unknown) is True
        assert evaluate(Not(x), self.unknown) is None

    def test_strict_operators(self):
        assert evaluate(BinOp("=", Var("x"), Const(1)), self.unknown) is None
        assert evaluate(BinOp("+", Const(1), Var("x")), self.unknown) is None

    def test_conditional(self):
        """An unknown condition still decides when both branches agree."""
        x = Var("x")
        assert evaluate(Ite(x, Const(2), Const(2)), self.unknown) == 2
        assert evaluate(Ite(x, Const(1), Const(2)), self.unknown) is None
        assert eval_state(Ite(Var("p"), Const(1), Const(2)), {"p": False}) == 2

    def test_sets(self):
        state = {"s": frozenset({"A"})}
        assert eval_state(BinOp("in", Const("A"), Var("s")), state) is True
        assert eval_state(BinOp("notin", Const("B"), Var("s")), state) is True
        union = BinOp("union", Var("s"), SetLit((Const("B"),)))
        assert eval_state(union, state) == frozenset({"A", "B"})

    def test_type_errors(self):
        with pytest.raises(EvaluationError):
            eval_state(BinOp("and", Const(1), Const(True)), {})
        with pytest.raises(EvaluationError):
            eval_state(BinOp("=", Const(True), Const(1)), {})
        with pytest.raises(EvaluationError):
            eval_state(BinOp("<", Const("A"), Const(1)), {})

    def test_variable_lookup(self):
        with pytest.raises(EvaluationError):
            eval_state(Var("missing"), {"a": 1})
        with pytest.raises(EvaluationError):
            eval_state(Var("a", primed=True), {"a": 1})
        assert eval_transition(BinOp("=", Var("a", primed=True), BinOp("+", Var("a"), Const(1))), {"a": 1}, {"a": 2})


def test_property_semantics():
    """An invariant holds on a trace when every state satisfies it; the negation flips that."""
    prop = Property("Small", BinOp("<", Var("a"), Const(2)))
    good, bad = Trace.of({"a": 0}, {"a": 1}), Trace.of({"a": 0}, {"a": 2})
    assert prop.satisfied_by(good)
    assert not prop.satisfied_by(bad)
    assert prop.negate().satisfied_by(bad)
    assert not prop.negate().satisfied_by(good)
    assert str(prop) == "G(Small)"
    assert str(prop.negate()) == "not G(Small)"


def test_property_rejects_primed_variables():
    with pytest.raises(ValueError):
        Property("P", Var("a", primed=True))


def test_system_enumeration(toggle_system):
    assert toggle_system.var_names == ("b",)
    assert toggle_system.initial_states() == (State(b=False),)
    assert toggle_system.successors(State(b=False)) == (State(b=True),)
    assert toggle_system.successors(State(b=True)) == (State(b=False),)


def test_system_rejects_duplicate_variables():
    with pytest.raises(ValueError):
        SymbolicTransitionSystem(vars=(VarDecl("a", Domain.boolean()), VarDecl("a", Domain.boolean())))


def test_unconstrained_system_visits_every_state(free_pair):
    """Without I and T every assignment is initial and a successor of every state."""
    states = all_states(free_pair)
    assert len(states) == 6
    assert free_pair.initial_states() == tuple(states)
    assert free_pair.successors(states[0]) == tuple(states)


def test_counter_successors_match_brute_force(counter_model):
    """Pruned assignment search agrees with testing every assignment."""
    sts = counter_model.system
    assert sts.initial_states() == (State(a=1),)
    assert sts.successors(State(a=1)) == (State(a=0), State(a=1), State(a=2))
    assert sts.successors(State(a=3)) == (State(a=2), State(a=3))
    assert [t.length for t in brute_traces(sts, 1)] == [0, 1, 1, 1]
