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

"""Trace constraints: representation, satisfaction, construction, minimization.

A trace constraint is an existentially quantified conjunction of atomic facts
whose positions are position variables `0..k-1` (rendered `i1..ik`).
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING, Iterator, Optional, Sequence

from .constants import EQ, LT, NEQ
from .errors import ClassifyError, log, log_errors
from .factgen import AtomicFact, ConstArg, FactSet, PosArg, VarAt, apply_predicate, compare_builtin, read_var
from .kernel import Property, State, SymbolicTransitionSystem, Trace

if TYPE_CHECKING:
    from .verifier import Bound, VerifierStats

logger = logging.getLogger(__name__)

PositionBinding = tuple[int, ...]


def position_name(index: int) -> str:
    return f"i{index + 1}"


@dataclass(frozen=True)
class TraceConstraint:
    """∃ i1..ik : conjunct /\\ ... /\\ conjunct."""
    position_vars: int
    conjuncts: tuple[AtomicFact, ...] = ()

    def __post_init__(self):
        if not isinstance(self.conjuncts, tuple):
            object.__setattr__(self, "conjuncts", tuple(self.conjuncts))
        for fact in self.conjuncts:
            for p in fact.positions:
                if not 0 <= p < self.position_vars:
                    raise ValueError(f"position variable {p} out of range in {fact}")

    @cached_property
    def _plan(self) -> tuple[tuple[AtomicFact, ...], tuple[tuple[AtomicFact, ...], ...]]:
        """Ground conjuncts, then conjuncts grouped by their highest position variable."""
        ground = tuple(f for f in self.conjuncts if not f.positions)
        buckets: list[list[AtomicFact]] = [[] for _ in range(self.position_vars)]
        for fact in self.conjuncts:
            if fact.positions:
                buckets[max(fact.positions)].append(fact)
        return ground, tuple(tuple(b) for b in buckets)

    @property
    def is_empty(self) -> bool:
        return not self.conjuncts

    def referenced(self) -> tuple[int, ...]:
        return tuple(sorted({p for f in self.conjuncts for p in f.positions}))

    def normalized(self) -> "TraceConstraint":
        """Drop position variables no conjunct references, keeping their order."""
        used = self.referenced()
        if len(used) == self.position_vars:
            return self
        mapping = {old: new for new, old in enumerate(used)}
        return TraceConstraint(len(used), tuple(f.remap(mapping.__getitem__) for f in self.conjuncts))

    def without(self, fact: AtomicFact) -> "TraceConstraint":
        return TraceConstraint(self.position_vars, tuple(f for f in self.conjuncts if f != fact))

    def canonical(self) -> tuple[int, tuple[AtomicFact, ...]]:
        """Form that is equal for constraints differing only by variable naming or conjunct order."""
        shape = sorted(self.conjuncts, key=lambda f: (f.render(lambda _: "_"), f.render()))
        order: dict[int, int] = {}
        for fact in shape:
            for p in fact.positions:
                order.setdefault(p, len(order))
        renamed = tuple(f.remap(order.__getitem__) for f in shape)
        return len(order), tuple(sorted(renamed, key=lambda f: f.render()))

    def same_as(self, other: "TraceConstraint") -> bool:
        return self.canonical() == other.canonical()

    def render(self) -> str:
        body = " /\\ ".join(f.render(position_name) for f in self.conjuncts) or "true"
        if not self.position_vars:
            return body
        names = ",".join(position_name(i) for i in range(self.position_vars))
        return f"exists {names} : {body}"

    def __str__(self) -> str:
        return self.render()


EMPTY_CONSTRAINT = TraceConstraint(0)


@dataclass(frozen=True)
class ConstraintSet:
    """Assumptions for a verifier call: satisfy every positive, match no blocked."""
    positive: tuple[TraceConstraint, ...] = ()
    blocked: tuple[TraceConstraint, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "positive", tuple(self.positive))
        object.__setattr__(self, "blocked", tuple(self.blocked))

    def admits(self, trace: Trace) -> bool:
        return all(satisfies(trace, w) for w in self.positive) and not any(satisfies(trace, w) for w in self.blocked)


NO_ASSUMPTIONS = ConstraintSet()


def _holds(fact: AtomicFact, trace: Trace, binding: Sequence[int]) -> bool:
    values = []
    for arg in fact.args:
        if isinstance(arg, VarAt):
            values.append(read_var(trace.states[binding[arg.pos]], arg.var))
        elif isinstance(arg, PosArg):
            values.append(binding[arg.pos])
        else:
            values.append(arg.value)
    return apply_predicate(fact.pred, values, trace)


def find_binding(trace: Trace, w: TraceConstraint, touching: Optional[int] = None) -> Optional[PositionBinding]:
    """Search position bindings into [0..len(trace)] exhaustively.

    With `touching`, only bindings that map some variable to that index count;
    the verifier uses this to test just the bindings a new last state adds.
    """
    ground, buckets = w._plan
    if not all(_holds(f, trace, ()) for f in ground):
        return None
    k = w.position_vars
    if k == 0:
        return () if touching is None else None
    size = len(trace.states)
    binding = [0] * k

    def search(j: int, touched: bool) -> bool:
        if j == k:
            return touching is None or touched
        last = j == k - 1
        for index in range(size):
            hit = touched or index == touching
            if last and touching is not None and not hit:
                continue
            binding[j] = index
            if all(_holds(f, trace, binding) for f in buckets[j]) and search(j + 1, hit):
                return True
        return False

    return tuple(binding) if search(0, False) else None


def satisfies(trace: Trace, w: TraceConstraint) -> bool:
    """ρ ⊨ w."""
    return find_binding(trace, w) is not None


Partial = tuple[Optional[State], ...]
MatchState = object

MATCHED: MatchState = object()


def builtin_only(w: TraceConstraint) -> bool:
    return all(f.pred.builtin for f in w.conjuncts)


class PrefixMatcher:
    """Tracks how far a growing trace has matched a built-in-only constraint.

    The match state of a prefix is the set of its partial bindings, each
    recorded as the states its bound position variables point at. Built-in
    facts read nothing else about an earlier index, and any later index lies
    after all of them, so prefixes with equal match states accept exactly the
    same extensions. A complete binding collapses the set to MATCHED.
    """

    def __init__(self, w: TraceConstraint):
        if not builtin_only(w):
            raise ValueError(f"{w} uses user predicates")
        self.k = w.position_vars
        ground, _ = w._plan
        holds = all(compare_builtin(f.pred, [a.value for a in f.args]) for f in ground)
        self.by_var = [
            [(f, frozenset(f.positions)) for f in w.conjuncts if j in f.positions]
            for j in range(self.k)
        ]
        self.orders = [(f.args[0].pos, f.args[1].pos) for f in w.conjuncts if f.pred.builtin == LT]
        if not holds:
            self.initial: MatchState = frozenset()
        elif self.k == 0:
            self.initial = MATCHED
        else:
            self.initial = frozenset({(None,) * self.k})

    def advance(self, partials: MatchState, state: State) -> MatchState:
        """Match state after appending `state` to the prefix."""
        if partials is MATCHED:
            return MATCHED
        grown = set(partials)
        for partial in partials:
            for extended in self._extend(partial, state):
                if None not in extended:
                    return MATCHED
                if self._viable(extended):
                    grown.add(extended)
        return frozenset(grown)

    def _extend(self, partial: Partial, state: State) -> Iterator[Partial]:
        fresh = [j for j in range(self.k) if partial[j] is None]
        current = list(partial)
        new: set[int] = set()

        def bind(at: int) -> Iterator[Partial]:
            if at == len(fresh):
                if new:
                    yield tuple(current)
                return
            yield from bind(at + 1)
            j = fresh[at]
            current[j] = state
            new.add(j)
            if all(self._holds(f, current, new) for f, positions in self.by_var[j] if all(current[p] is not None for p in positions)):
                yield from bind(at + 1)
            current[j] = None
            new.discard(j)

        yield from bind(0)

    @staticmethod
    def _holds(fact: AtomicFact, current: list, new: set[int]) -> bool:
        if fact.pred.builtin == LT:
            # variables bound in this step share the newest index
            return fact.args[0].pos not in new and fact.args[1].pos in new
        values = [read_var(current[a.pos], a.var) if isinstance(a, VarAt) else a.value for a in fact.args]
        return compare_builtin(fact.pred, values)

    def _viable(self, partial: Partial) -> bool:
        # an unbound variable can only land after every bound one
        return not any(partial[a] is None and partial[b] is not None for a, b in self.orders)


def trace_constraint(gamma: FactSet | Sequence[AtomicFact], trace: Trace) -> TraceConstraint:
    """Generalize Γ: one position variable per distinct index, in index order."""
    facts_ = tuple(gamma)
    used = sorted({p for f in facts_ for p in f.positions})
    for p in used:
        if p > trace.length:
            raise ValueError(f"fact position {p} outside the trace")
    mapping = {index: var for var, index in enumerate(used)}
    return TraceConstraint(len(used), tuple(f.remap(mapping.__getitem__) for f in facts_))


def implies_violation(sts: SymbolicTransitionSystem, w: TraceConstraint, prop: Property, bound: "Bound", stats: Optional["VerifierStats"] = None) -> bool:
    """Every bounded trace satisfying w violates the property."""
    return _good_witness(sts, w, prop, bound, stats) is None


def _good_witness(sts, w, prop, bound, stats) -> Optional[Trace]:
    from .verifier import verify

    outcome = verify(sts, ConstraintSet(positive=(w,)), prop.negate(), bound, canonical=False, stats=stats)
    return outcome.witness


def entailed(fact: AtomicFact, others: Sequence[AtomicFact]) -> bool:
    """Whether the constants pinned by `others` already decide `fact` to hold."""
    if fact.pred.builtin not in (EQ, NEQ):
        return False
    pinned = {
        f.args[0]: f.args[1].value
        for f in others
        if f.pred.builtin == EQ and isinstance(f.args[0], VarAt) and isinstance(f.args[1], ConstArg)
    }
    values = []
    for arg in fact.args:
        if isinstance(arg, ConstArg):
            values.append(arg.value)
        elif arg in pinned:
            values.append(pinned[arg])
        else:
            return False
    return compare_builtin(fact.pred, values)


@log_errors(logger, "TraceConstraint", "minimize")
def minimize_tc(sts: SymbolicTransitionSystem, w: TraceConstraint, prop: Property, bound: "Bound", stats: Optional["VerifierStats"] = None) -> TraceConstraint:
    """Deletion-based minimization: drop each conjunct, in order, whose removal keeps the guarantee.

    A conjunct the remaining ones already force is dropped without a search,
    since the class does not change. Good traces found along the way are
    remembered; a candidate that one of them satisfies is rejected without
    another search.
    """
    if not implies_violation(sts, w, prop, bound, stats):
        raise ClassifyError("Γ does not sufficiently characterize the violation")
    witnesses: list[Trace] = []
    current = w
    for fact in w.conjuncts:
        candidate = current.without(fact)
        if entailed(fact, candidate.conjuncts):
            current = candidate
            continue
        if any(satisfies(t, candidate) for t in witnesses):
            continue
        witness = _good_witness(sts, candidate, prop, bound, stats)
        if witness is None:
            current = candidate
        else:
            witnesses.append(witness)
    result = current.normalized()
    log(logger, "TraceConstraint", "debug", "minimize", f"{len(w.conjuncts)} -> {len(result.conjuncts)} conjuncts")
    return result


def materialize(sts: SymbolicTransitionSystem, w: TraceConstraint, bound: "Bound") -> frozenset[Trace]:
    """c(w) at the bound."""
    from .verifier import enumerate_traces

    return frozenset(enumerate_traces(sts, bound, ConstraintSet(positive=(w,))))


def render_constraint(w: TraceConstraint) -> str:
    return w.render()


def canonical_form(w: TraceConstraint) -> tuple[int, tuple[AtomicFact, ...]]:
    return w.canonical()


__all__ = [
    "ConstraintSet",
    "EMPTY_CONSTRAINT",
    "MATCHED",
    "NO_ASSUMPTIONS",
    "PositionBinding",
    "PrefixMatcher",
    "TraceConstraint",
    "builtin_only",
    "canonical_form",
    "entailed",
    "find_binding",
    "implies_violation",
    "materialize",
    "minimize_tc",
    "position_name",
    "render_constraint",
    "satisfies",
    "trace_constraint",
]
