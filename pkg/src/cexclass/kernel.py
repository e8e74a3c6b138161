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

"""Formal core: domains, states, traces, expressions and transition systems.

Everything here is immutable after construction. Expressions are evaluated
with a three-valued interpreter so the same code serves plain evaluation
(every variable known) and the partial evaluation used to enumerate initial
states and successors variable by variable.
"""

import itertools
import logging
from collections.abc import Mapping
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterator, Literal, Optional, Union

from .constants import MAX_SET_SYMBOLS
from .errors import EvaluationError, log

logger = logging.getLogger(__name__)

Value = Union[bool, int, str, frozenset]

DomainKind = Literal["bool", "int", "enum", "set"]


def render_value(value: Value) -> str:
    """Render a value the way the model language spells it."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, frozenset):
        return "{" + ", ".join(sorted(value)) + "}"
    return str(value)


@dataclass(frozen=True)
class Domain:
    """Finite value set of a variable.

    Equality ignores the optional type name: two enumerations with the same
    symbols in the same order are the same domain.
    """
    kind: DomainKind
    lo: int = 0
    hi: int = 0
    symbols: tuple[str, ...] = ()
    name: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind == "int" and self.lo > self.hi:
            raise ValueError(f"empty integer range {self.lo}..{self.hi}")
        if self.kind in ("enum", "set"):
            if not self.symbols:
                raise ValueError("enumeration needs at least one symbol")
            if len(set(self.symbols)) != len(self.symbols):
                raise ValueError(f"duplicate symbols in {{{', '.join(self.symbols)}}}")
        if self.kind == "set" and len(self.symbols) > MAX_SET_SYMBOLS:
            raise ValueError(f"set element type has more than {MAX_SET_SYMBOLS} symbols")

    @classmethod
    def boolean(cls) -> "Domain":
        return cls("bool")

    @classmethod
    def integer(cls, lo: int, hi: int) -> "Domain":
        return cls("int", lo=lo, hi=hi)

    @classmethod
    def enum(cls, symbols: tuple[str, ...] | list[str], name: Optional[str] = None) -> "Domain":
        return cls("enum", symbols=tuple(symbols), name=name)

    @classmethod
    def set_of(cls, symbols: tuple[str, ...] | list[str], name: Optional[str] = None) -> "Domain":
        return cls("set", symbols=tuple(symbols), name=name)

    @cached_property
    def values(self) -> tuple[Value, ...]:
        """All values in canonical order."""
        if self.kind == "bool":
            return (False, True)
        if self.kind == "int":
            return tuple(range(self.lo, self.hi + 1))
        if self.kind == "enum":
            return self.symbols
        return tuple(
            frozenset(combo)
            for size in range(len(self.symbols) + 1)
            for combo in itertools.combinations(self.symbols, size)
        )

    def contains(self, value: Value) -> bool:
        if self.kind == "bool":
            return isinstance(value, bool)
        if self.kind == "int":
            return isinstance(value, int) and not isinstance(value, bool) and self.lo <= value <= self.hi
        if self.kind == "enum":
            return isinstance(value, str) and value in self.symbols
        return isinstance(value, frozenset) and value <= set(self.symbols)

    def __str__(self) -> str:
        if self.kind == "bool":
            return "bool"
        if self.kind == "int":
            return f"int[{self.lo}..{self.hi}]"
        if self.kind == "enum":
            return self.name or "{" + ", ".join(self.symbols) + "}"
        return f"set of {self.name or '{' + ', '.join(self.symbols) + '}'}"


@dataclass(frozen=True)
class VarDecl:
    name: str
    domain: Domain


class State(Mapping):
    """Total assignment of values to state variables.

    Iteration follows the variable declaration order the state was built with.
    """

    __slots__ = ("_values", "_hash")

    def __init__(self, assignment: Mapping[str, Value] | None = None, **values: Value):
        self._values: dict[str, Value] = dict(assignment or {}, **values)
        self._hash: Optional[int] = None

    def __getitem__(self, name: str) -> Value:
        return self._values[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._values)

    def __len__(self) -> int:
        return len(self._values)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._values.items()))
        return self._hash

    def __eq__(self, other: object) -> bool:
        if isinstance(other, State):
            return self._values == other._values
        return NotImplemented

    def __repr__(self) -> str:
        return f"State({self._values!r})"

    def __str__(self) -> str:
        return "(" + ", ".join(f"{k}={render_value(v)}" for k, v in self._values.items()) + ")"

    def to_dict(self) -> dict[str, Value]:
        return dict(self._values)


@dataclass(frozen=True)
class Trace:
    """Finite, non-empty sequence of states."""
    states: tuple[State, ...]

    def __post_init__(self):
        if not isinstance(self.states, tuple):
            object.__setattr__(self, "states", tuple(self.states))
        if not self.states:
            raise ValueError("a trace has at least one state")

    @classmethod
    def of(cls, *states: State | Mapping[str, Value]) -> "Trace":
        return cls(tuple(s if isinstance(s, State) else State(s) for s in states))

    @property
    def length(self) -> int:
        """Number of transitions."""
        return len(self.states) - 1

    @property
    def positions(self) -> range:
        return range(len(self.states))

    def __getitem__(self, index: int) -> State:
        return self.states[index]

    def __iter__(self) -> Iterator[State]:
        return iter(self.states)

    def extend(self, *states: State) -> "Trace":
        return Trace(self.states + tuple(states))

    def __str__(self) -> str:
        return " -> ".join(str(s) for s in self.states)


# --- Expressions ---

@dataclass(frozen=True)
class Expr:
    """Base class for expression nodes; `loc` is the (line, column) in source."""
    loc: tuple[int, int] = field(default=(0, 0), compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class Const(Expr):
    value: Value


@dataclass(frozen=True)
class Var(Expr):
    """State variable reference, optionally primed or read at a position parameter."""
    name: str
    primed: bool = False
    at: Optional[str] = None


@dataclass(frozen=True)
class Param(Expr):
    """Value parameter of a predicate; `field` selects a record component."""
    name: str
    field: Optional[str] = None


@dataclass(frozen=True)
class PosVar(Expr):
    """Position parameter used as an integer index."""
    name: str


@dataclass(frozen=True)
class Not(Expr):
    operand: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Ite(Expr):
    cond: Expr
    then: Expr
    other: Expr


@dataclass(frozen=True)
class SetLit(Expr):
    items: tuple[Expr, ...]


TRUE_EXPR = Const(True)

BOOL_OPS = frozenset({"and", "or", "implies"})
COMPARE_OPS = frozenset({"=", "!=", "<", "<=", ">", ">="})
ARITH_OPS = frozenset({"+", "-"})
SET_OPS = frozenset({"in", "notin", "union"})


def conjoin(*exprs: Expr) -> Expr:
    """Left-nested conjunction; `true` for no operands."""
    parts = [e for e in exprs if e != TRUE_EXPR]
    if not parts:
        return TRUE_EXPR
    result = parts[0]
    for part in parts[1:]:
        result = BinOp("and", result, part, loc=part.loc)
    return result


def walk(expr: Expr) -> Iterator[Expr]:
    """Yield every node of an expression tree, pre-order."""
    yield expr
    if isinstance(expr, Not):
        yield from walk(expr.operand)
    elif isinstance(expr, BinOp):
        yield from walk(expr.left)
        yield from walk(expr.right)
    elif isinstance(expr, Ite):
        yield from walk(expr.cond)
        yield from walk(expr.then)
        yield from walk(expr.other)
    elif isinstance(expr, SetLit):
        for item in expr.items:
            yield from walk(item)


# A lookup resolves Var/Param/PosVar nodes; returning None means "unknown".
Lookup = Callable[[Expr], Optional[Value]]


def _require_bool(value: Optional[Value], op: str) -> Optional[bool]:
    if value is None or isinstance(value, bool):
        return value
    raise EvaluationError(f"operand of '{op}' is not boolean: {render_value(value)}")


def _require_int(value: Optional[Value], op: str) -> Optional[int]:
    if value is None or (isinstance(value, int) and not isinstance(value, bool)):
        return value
    raise EvaluationError(f"operand of '{op}' is not an integer: {render_value(value)}")


def _same_kind(a: Value, b: Value) -> bool:
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool)
    return type(a) is type(b)


def evaluate(expr: Expr, lookup: Lookup) -> Optional[Value]:
    """Three-valued evaluation; None stands for unknown.

    Connectives follow Kleene logic, everything else is strict in unknowns.
    """
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, (Var, Param, PosVar)):
        return lookup(expr)
    if isinstance(expr, Not):
        value = _require_bool(evaluate(expr.operand, lookup), "not")
        return None if value is None else not value
    if isinstance(expr, Ite):
        cond = _require_bool(evaluate(expr.cond, lookup), "if")
        if cond is True:
            return evaluate(expr.then, lookup)
        if cond is False:
            return evaluate(expr.other, lookup)
        then, other = evaluate(expr.then, lookup), evaluate(expr.other, lookup)
        return then if then is not None and then == other else None
    if isinstance(expr, SetLit):
        items = [evaluate(item, lookup) for item in expr.items]
        return None if any(i is None for i in items) else frozenset(items)
    if isinstance(expr, BinOp):
        return _evaluate_binop(expr, lookup)
    raise EvaluationError(f"cannot evaluate {type(expr).__name__}")


def _evaluate_binop(expr: BinOp, lookup: Lookup) -> Optional[Value]:
    op = expr.op
    if op in BOOL_OPS:
        left = _require_bool(evaluate(expr.left, lookup), op)
        right = _require_bool(evaluate(expr.right, lookup), op)
        if op == "implies":
            left = None if left is None else not left
            op = "or"
        if op == "and":
            if left is False or right is False:
                return False
            return None if left is None or right is None else True
        if left is True or right is True:
            return True
        return None if left is None or right is None else False

    left, right = evaluate(expr.left, lookup), evaluate(expr.right, lookup)
    if left is None or right is None:
        return None
    if op in ("=", "!="):
        if not _same_kind(left, right):
            raise EvaluationError(f"cannot compare {render_value(left)} with {render_value(right)}")
        return (left == right) if op == "=" else (left != right)
    if op in COMPARE_OPS or op in ARITH_OPS:
        a, b = _require_int(left, op), _require_int(right, op)
        return {
            "<": lambda: a < b,
            "<=": lambda: a <= b,
            ">": lambda: a > b,
            ">=": lambda: a >= b,
            "+": lambda: a + b,
            "-": lambda: a - b,
        }[op]()
    if op in ("in", "notin"):
        if not isinstance(right, frozenset):
            raise EvaluationError(f"right operand of '{op}' is not a set")
        return (left in right) if op == "in" else (left not in right)
    if op == "union":
        if not (isinstance(left, frozenset) and isinstance(right, frozenset)):
            raise EvaluationError("operands of 'union' must be sets")
        return left | right
    raise EvaluationError(f"unknown operator '{op}'")


def _state_lookup(current: Mapping[str, Value], following: Optional[Mapping[str, Value]] = None, *, partial: bool = False) -> Lookup:
    def lookup(node: Expr) -> Optional[Value]:
        if not isinstance(node, Var) or node.at is not None:
            raise EvaluationError(f"'{_node_name(node)}' is not a state variable reference")
        if node.primed:
            if following is None:
                raise EvaluationError(f"primed variable '{node.name}' outside a transition predicate")
            source = following
        else:
            source = current
        if node.name in source:
            return source[node.name]
        if partial:
            return None
        raise EvaluationError(f"unknown variable '{node.name}'")
    return lookup


def _node_name(node: Expr) -> str:
    return getattr(node, "name", type(node).__name__)


def _as_bool(value: Optional[Value], what: str) -> bool:
    if not isinstance(value, bool):
        raise EvaluationError(f"{what} did not evaluate to a boolean")
    return value


def eval_state(expr: Expr, state: Mapping[str, Value]) -> Value:
    """Evaluate an expression over X in a single state."""
    value = evaluate(expr, _state_lookup(state))
    if value is None:
        raise EvaluationError("expression could not be fully evaluated")
    return value


def eval_transition(expr: Expr, state: Mapping[str, Value], following: Mapping[str, Value]) -> bool:
    """Evaluate a predicate over X ∪ X′ on a pair of states."""
    return _as_bool(evaluate(expr, _state_lookup(state, following)), "transition predicate")


@dataclass(frozen=True)
class Property:
    """Invariant G(expr); the negated form holds on traces that leave expr somewhere."""
    name: str
    expr: Expr
    negated: bool = False

    def __post_init__(self):
        for node in walk(self.expr):
            if isinstance(node, Var) and (node.primed or node.at is not None):
                raise ValueError(f"property '{self.name}' references '{node.name}' outside a single state")

    def holds_at(self, state: Mapping[str, Value]) -> bool:
        """Whether the invariant expression holds in one state."""
        return _as_bool(eval_state(self.expr, state), f"property '{self.name}'")

    def satisfied_by(self, trace: Trace) -> bool:
        every = all(self.holds_at(s) for s in trace)
        return not every if self.negated else every

    def negate(self) -> "Property":
        return Property(self.name, self.expr, not self.negated)

    def __str__(self) -> str:
        return f"{'not ' if self.negated else ''}G({self.name})"


def trace_satisfies_property(trace: Trace, prop: Property) -> bool:
    return prop.satisfied_by(trace)


@dataclass(frozen=True, eq=False)
class SymbolicTransitionSystem:
    """The tuple (X, I, T) over finite domains.

    Initial states and successors are enumerated in canonical order (variables
    in declaration order, values in domain order) and memoised per system.
    """
    vars: tuple[VarDecl, ...]
    init: Expr = TRUE_EXPR
    trans: Expr = TRUE_EXPR
    _memo: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.vars, tuple):
            object.__setattr__(self, "vars", tuple(self.vars))
        names = [v.name for v in self.vars]
        if len(set(names)) != len(names):
            raise ValueError("variable names must be unique")
        for node in walk(self.init):
            if isinstance(node, Var) and node.primed:
                raise ValueError(f"initial predicate references primed variable '{node.name}'")

    @cached_property
    def var_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.vars)

    @cached_property
    def domains(self) -> dict[str, Domain]:
        return {v.name: v.domain for v in self.vars}

    def initial_states(self) -> tuple[State, ...]:
        if "init" not in self._memo:
            self._memo["init"] = tuple(self._assignments(self.init, None))
            log(logger, "Kernel", "debug", "initial_states", f"{len(self._memo['init'])} initial states")
        return self._memo["init"]

    def successors(self, state: State) -> tuple[State, ...]:
        cache = self._memo.setdefault("succ", {})
        if state not in cache:
            cache[state] = tuple(self._assignments(self.trans, state))
        return cache[state]

    def _assignments(self, expr: Expr, current: Optional[State]) -> Iterator[State]:
        """Assign variables in order, pruning as soon as expr is definitely false."""
        partial: dict[str, Value] = {}
        if current is None:
            lookup = _state_lookup(partial, partial=True)
        else:
            lookup = _state_lookup(current, partial, partial=True)
        names = self.var_names

        def extend(index: int) -> Iterator[State]:
            if index == len(names):
                result = evaluate(expr, lookup)
                if result is None:
                    raise EvaluationError("predicate references an undeclared variable")
                if result is True:
                    yield State({n: partial[n] for n in names})
                return
            name = names[index]
            for value in self.domains[name].values:
                partial[name] = value
                if evaluate(expr, lookup) is not False:
                    yield from extend(index + 1)
            del partial[name]

        if current is None or evaluate(expr, lookup) is not False:
            yield from extend(0)
