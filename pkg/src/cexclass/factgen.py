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

"""Predicate definitions and instantiation of V over a counterexample.

`facts` produces Γ, every true instantiation of every predicate of V on a
trace, following a fixed binding scheme:

- `=` relates same-domain variable occurrences (var@p = var@q, p <= q) and
  pins each occurrence to its observed value (var@p = c);
- `!=` mirrors `=` with the values observed elsewhere in the trace;
- `<` links consecutive positions only;
- user predicates are instantiated over every typechecking tuple of
  var@pos occurrences and positions, up to `max_arity` parameters.

The order of Γ is significant: minimization deletes conjuncts in this order.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Literal, Optional, Sequence, Union

from .constants import DEFAULT_EQ_WINDOW, DEFAULT_MAX_ARITY, EQ, LT, NEQ, TRUE
from .errors import EvaluationError, InvariantBreach, log
from .kernel import Domain, Expr, Param, PosVar, State, SymbolicTransitionSystem, Trace, Value, Var, evaluate, render_value

logger = logging.getLogger(__name__)

ParamKind = Literal["pos", "value", "record"]


@dataclass(frozen=True)
class RecordType:
    name: str
    fields: tuple[tuple[str, Domain], ...]

    def field_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.fields)


@dataclass(frozen=True, eq=False)
class Schema:
    """Variable domains in declaration order plus record groupings."""
    domains: dict[str, Domain]
    records: dict[str, RecordType] = field(default_factory=dict)

    @classmethod
    def of(cls, sts: SymbolicTransitionSystem, records: Optional[dict[str, RecordType]] = None) -> "Schema":
        return cls(dict(sts.domains), dict(records or {}))

    @property
    def var_names(self) -> tuple[str, ...]:
        return tuple(self.domains)


@dataclass(frozen=True)
class ParamSpec:
    """One predicate parameter.

    `type_name` is what the source spelled: `pos`, `int`, `bool`, a named
    enumeration or a record type. A value parameter typed `int` accepts any
    integer variable; other value parameters require an equal domain.
    """
    name: str
    kind: ParamKind
    type_name: str
    domain: Optional[Domain] = None
    record: Optional[RecordType] = None

    def accepts_var(self, var: str, schema: Schema) -> bool:
        if self.kind == "record":
            record = schema.records.get(var)
            return record is not None and self.record is not None and record.name == self.record.name
        if self.kind != "value" or var not in schema.domains:
            return False
        domain = schema.domains[var]
        if self.type_name == "int":
            return domain.kind == "int"
        return self.domain is not None and domain == self.domain


@dataclass(frozen=True, eq=False)
class PredicateDef:
    """A named predicate of V. Built-ins carry `builtin`, user predicates a body."""
    name: str
    params: tuple[ParamSpec, ...] = ()
    body: Optional[Expr] = None
    builtin: Optional[str] = None

    def _key(self) -> tuple:
        return (self.name, self.builtin, self.params)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, PredicateDef):
            return self._key() == other._key()
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._key())

    @property
    def arity(self) -> int:
        return len(self.params)

    @property
    def is_positional(self) -> bool:
        return all(p.kind == "pos" for p in self.params)

    def __str__(self) -> str:
        if self.builtin:
            return self.name
        params = ", ".join(f"{p.name}: {p.type_name}" for p in self.params)
        return f"{self.name}[{params}]"


EQ_PRED = PredicateDef(EQ, (ParamSpec("x", "value", "any"), ParamSpec("y", "value", "any")), builtin=EQ)
NEQ_PRED = PredicateDef(NEQ, (ParamSpec("x", "value", "any"), ParamSpec("y", "value", "any")), builtin=NEQ)
LT_PRED = PredicateDef(LT, (ParamSpec("i", "pos", "pos"), ParamSpec("j", "pos", "pos")), builtin=LT)
TRUE_PRED = PredicateDef(TRUE, builtin=TRUE)

BUILTINS = {p.name: p for p in (EQ_PRED, NEQ_PRED, LT_PRED, TRUE_PRED)}


# --- Arguments and facts ---

@dataclass(frozen=True)
class VarAt:
    """Occurrence of a (possibly record) variable at a position."""
    var: str
    pos: int


@dataclass(frozen=True)
class ConstArg:
    value: Value


@dataclass(frozen=True)
class PosArg:
    pos: int


Arg = Union[VarAt, ConstArg, PosArg]


def _remap_arg(arg: Arg, mapping: Callable[[int], int]) -> Arg:
    if isinstance(arg, VarAt):
        return VarAt(arg.var, mapping(arg.pos))
    if isinstance(arg, PosArg):
        return PosArg(mapping(arg.pos))
    return arg


@dataclass(frozen=True)
class AtomicFact:
    """An instantiated predicate.

    Positions are concrete trace indices inside a FactSet and position-variable
    indices once the fact is part of a TraceConstraint.
    """
    pred: PredicateDef
    args: tuple[Arg, ...]

    @property
    def positions(self) -> tuple[int, ...]:
        seen: dict[int, None] = {}
        for arg in self.args:
            if isinstance(arg, (VarAt, PosArg)):
                seen.setdefault(arg.pos, None)
        return tuple(seen)

    def remap(self, mapping: Callable[[int], int]) -> "AtomicFact":
        return AtomicFact(self.pred, tuple(_remap_arg(a, mapping) for a in self.args))

    def render(self, pos_name: Callable[[int], str] = str) -> str:
        def show(arg: Arg) -> str:
            if isinstance(arg, VarAt):
                return f"{arg.var}@{pos_name(arg.pos)}"
            if isinstance(arg, PosArg):
                return pos_name(arg.pos)
            return render_value(arg.value)

        if self.pred.builtin == TRUE:
            return "true"
        if self.pred.builtin:
            return f"{show(self.args[0])} {self.pred.name} {show(self.args[1])}"
        return f"{self.pred.name}[{', '.join(show(a) for a in self.args)}]"

    def __str__(self) -> str:
        return self.render()


@dataclass(frozen=True)
class FactConfig:
    max_arity: int = DEFAULT_MAX_ARITY
    eq_window: Optional[int] = DEFAULT_EQ_WINDOW


@dataclass(frozen=True)
class FactSet:
    """Γ for one trace, in deletion order."""
    facts: tuple[AtomicFact, ...]
    capped: bool = False

    @property
    def positions_used(self) -> tuple[int, ...]:
        return tuple(sorted({p for f in self.facts for p in f.positions}))

    def __iter__(self):
        return iter(self.facts)

    def __len__(self) -> int:
        return len(self.facts)

    def __bool__(self) -> bool:
        return bool(self.facts)


# --- Evaluation ---

def read_var(state: State, var: str) -> Value | dict[str, Value]:
    """Value of a variable, or a field dict for a record variable."""
    try:
        return state[var]
    except KeyError:
        pass
    prefix = var + "."
    record = {k[len(prefix):]: v for k, v in state.items() if k.startswith(prefix)}
    if not record:
        raise EvaluationError(f"unknown variable '{var}'")
    return record


def resolve_arg(arg: Arg, trace: Trace) -> Value | dict[str, Value]:
    if isinstance(arg, ConstArg):
        return arg.value
    if not 0 <= arg.pos < len(trace.states):
        raise InvariantBreach(f"position {arg.pos} outside trace of length {trace.length}")
    if isinstance(arg, PosArg):
        return arg.pos
    return read_var(trace[arg.pos], arg.var)


def compare_builtin(pred: PredicateDef, values: Sequence) -> bool:
    """Truth of a built-in predicate on already resolved values."""
    if pred.builtin == TRUE:
        return True
    if pred.builtin in (EQ, NEQ):
        a, b = values
        if isinstance(a, bool) != isinstance(b, bool):
            return pred.builtin == NEQ
        return (a == b) if pred.builtin == EQ else (a != b)
    if pred.builtin == LT:
        return values[0] < values[1]
    raise ValueError(f"'{pred.name}' is not a built-in predicate")


def apply_predicate(pred: PredicateDef, values: Sequence, trace: Trace) -> bool:
    if pred.builtin:
        return compare_builtin(pred, values)

    bound = {p.name: v for p, v in zip(pred.params, values)}

    def lookup(node: Expr) -> Optional[Value]:
        if isinstance(node, Param):
            value = bound[node.name]
            if node.field is None:
                return value
            if not isinstance(value, dict) or node.field not in value:
                raise EvaluationError(f"'{node.name}' has no field '{node.field}'")
            return value[node.field]
        if isinstance(node, PosVar):
            return bound[node.name]
        if isinstance(node, Var) and node.at is not None:
            index = bound[node.at]
            if not 0 <= index < len(trace.states):
                raise InvariantBreach(f"position {index} outside trace of length {trace.length}")
            return trace[index][node.name]
        raise EvaluationError(f"'{getattr(node, 'name', node)}' cannot be read inside predicate '{pred.name}'")

    result = evaluate(pred.body, lookup)
    if not isinstance(result, bool):
        raise EvaluationError(f"predicate '{pred.name}' did not evaluate to a boolean")
    return result


def eval_fact(fact: AtomicFact, trace: Trace, binding: Optional[Sequence[int]] = None) -> bool:
    """Truth of a fact on a trace; `binding` maps position variables to indices."""
    if binding is not None:
        fact = fact.remap(lambda v: binding[v])
    return apply_predicate(fact.pred, [resolve_arg(a, trace) for a in fact.args], trace)


def typecheck(pred: PredicateDef, args: Sequence[Arg], schema: Schema) -> bool:
    """Whether each argument matches its parameter's declared type."""
    if pred.builtin in (EQ, NEQ):
        if len(args) != 2:
            return False
        domains = []
        for arg in args:
            if isinstance(arg, VarAt) and arg.var in schema.domains:
                domains.append(schema.domains[arg.var])
            elif isinstance(arg, ConstArg):
                domains.append(None)
            else:
                return False
        known = [d for d in domains if d is not None]
        if not known:
            return False
        if len(known) == 2:
            return known[0] == known[1]
        const = next(a for a in args if isinstance(a, ConstArg))
        return known[0].contains(const.value)
    if len(args) != pred.arity:
        return False
    for param, arg in zip(pred.params, args):
        if param.kind == "pos":
            if not isinstance(arg, PosArg):
                return False
        elif not (isinstance(arg, VarAt) and param.accepts_var(arg.var, schema)):
            return False
    return True


# --- Generation ---

def _relational(trace: Trace, schema: Schema, window: Optional[int], same: bool) -> tuple[list[AtomicFact], bool]:
    pred = EQ_PRED if same else NEQ_PRED
    names = schema.var_names
    positions = trace.positions
    facts: list[AtomicFact] = []
    capped = False
    for p in positions:
        for i, v in enumerate(names):
            for q in positions[p:]:
                if window is not None and q - p >= window:
                    capped = True
                    break
                for j, u in enumerate(names):
                    if q == p and j <= i:
                        continue
                    if schema.domains[v] != schema.domains[u]:
                        continue
                    if (trace[p][v] == trace[q][u]) == same:
                        facts.append(AtomicFact(pred, (VarAt(v, p), VarAt(u, q))))
    return facts, capped


def _constants(trace: Trace, schema: Schema, same: bool) -> list[AtomicFact]:
    pred = EQ_PRED if same else NEQ_PRED
    facts: list[AtomicFact] = []
    for v in schema.var_names:
        domain = schema.domains[v]
        observed = {trace[p][v] for p in trace.positions}
        for p in trace.positions:
            value = trace[p][v]
            if same:
                facts.append(AtomicFact(pred, (VarAt(v, p), ConstArg(value))))
                continue
            for other in domain.values:
                if other != value and other in observed:
                    facts.append(AtomicFact(pred, (VarAt(v, p), ConstArg(other))))
    return facts


def _candidates(param: ParamSpec, trace: Trace, schema: Schema) -> list[Arg]:
    if param.kind == "pos":
        return [PosArg(p) for p in trace.positions]
    pool: Iterable[str] = schema.records if param.kind == "record" else schema.var_names
    return [VarAt(v, p) for v in pool if param.accepts_var(v, schema) for p in trace.positions]


def instantiate(pred: PredicateDef, trace: Trace, schema: Schema) -> list[AtomicFact]:
    """Every true, typechecked instantiation of a user predicate on the trace."""
    pools = [_candidates(param, trace, schema) for param in pred.params]
    return [
        AtomicFact(pred, args)
        for args in itertools.product(*pools)
        if apply_predicate(pred, [resolve_arg(a, trace) for a in args], trace)
    ]


def facts(trace: Trace, predicates: Sequence[PredicateDef], schema: Schema, config: FactConfig = FactConfig()) -> FactSet:
    """Build Γ: all facts of V that hold on the trace, in deletion order."""
    gamma: list[AtomicFact] = []
    capped = False
    for pred in predicates or (TRUE_PRED,):
        if pred.builtin in (EQ, NEQ):
            same = pred.builtin == EQ
            related, was_capped = _relational(trace, schema, config.eq_window, same)
            capped |= was_capped
            gamma.extend(related)
            gamma.extend(_constants(trace, schema, same))
        elif pred.builtin == LT:
            gamma.extend(AtomicFact(LT_PRED, (PosArg(p), PosArg(p + 1))) for p in trace.positions[:-1])
        elif pred.builtin == TRUE:
            gamma.append(AtomicFact(TRUE_PRED, ()))
        elif pred.arity > config.max_arity:
            log(logger, "Facts", "warning", "facts", f"skipping '{pred.name}': arity {pred.arity} exceeds {config.max_arity}")
            capped = True
        else:
            gamma.extend(instantiate(pred, trace, schema))

    unique = tuple(dict.fromkeys(gamma))
    log(logger, "Facts", "debug", "facts", f"{len(unique)} facts over {len(trace.states)} positions")
    return FactSet(unique, capped)
