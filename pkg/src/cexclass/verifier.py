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

"""Bounded explicit-state verifier.

Traces are produced in canonical order: shorter traces first, then
lexicographically by successor state, where states are ordered by assigning
variables in declaration order and values in domain order.
"""

import logging
import time
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Optional

from .errors import log, log_errors
from .kernel import Property, State, SymbolicTransitionSystem, Trace
from .tracecon import MATCHED, NO_ASSUMPTIONS, ConstraintSet, PrefixMatcher, builtin_only, find_binding

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Bound:
    """Maximum number of transitions per trace; `exact` keeps only traces of that length."""
    max_len: int
    exact: bool = False

    def __post_init__(self):
        if self.max_len < 0:
            raise ValueError(f"bound must be non-negative, got {self.max_len}")

    def lengths(self) -> range:
        return range(self.max_len, self.max_len + 1) if self.exact else range(self.max_len + 1)

    def __str__(self) -> str:
        return f"{'=' if self.exact else '<='}{self.max_len}"


class Status(str, Enum):
    OK = "OK"
    VIOLATED = "Violated"


@dataclass(frozen=True)
class VerifyOutcome:
    status: Status
    witness: Optional[Trace] = None

    def __post_init__(self):
        if (self.status is Status.VIOLATED) != (self.witness is not None):
            raise ValueError("a witness is present exactly when the property is violated")

    @property
    def ok(self) -> bool:
        return self.status is Status.OK


OK = VerifyOutcome(Status.OK)


@dataclass
class VerifierStats:
    """Counters shared across verifier calls of one run."""
    calls: int = 0
    nodes: int = 0
    seconds: float = 0.0

    @property
    def millis(self) -> float:
        return self.seconds * 1000.0


class _Search:
    """One depth-bounded DFS over the trace tree under a constraint set."""

    def __init__(self, sts: SymbolicTransitionSystem, assume: ConstraintSet, depth: int, wanted: range, avoid: Optional[Property], stats: Optional[VerifierStats]):
        self.sts = sts
        self.assume = assume
        self.depth = depth
        self.wanted = wanted
        self.avoid = avoid
        self.stats = stats
        self.reached = False

    def run(self) -> Iterator[Trace]:
        flags = (False,) * len(self.assume.positive)
        for state in self.sts.initial_states():
            yield from self._visit(Trace((state,)), flags)

    def _visit(self, trace: Trace, flags: tuple[bool, ...]) -> Iterator[Trace]:
        if self.stats is not None:
            self.stats.nodes += 1
        length = trace.length
        last: State = trace.states[-1]
        if self.avoid is not None and not self.avoid.holds_at(last):
            return
        touching = None if length == 0 else length
        # constraints are existential, so a matched prefix stays matched
        if any(find_binding(trace, w, touching) is not None for w in self.assume.blocked):
            return
        flags = tuple(done or find_binding(trace, w, touching) is not None for done, w in zip(flags, self.assume.positive))
        if length == self.depth:
            self.reached = True
        if length in self.wanted and all(flags):
            yield trace
        if length < self.depth:
            for state in self.sts.successors(last):
                yield from self._visit(trace.extend(state), flags)


class _SummarySearch:
    """Existence search that skips prefixes already known to lead nowhere.

    A prefix is summarized by its length, its last state, the match state of
    every constraint and whether it has left the invariant. Prefixes with the
    same summary have the same extensions, so a summary whose subtree held no
    witness is never searched again. Only built-in constraints summarize this
    way; see `PrefixMatcher`.
    """

    def __init__(self, sts: SymbolicTransitionSystem, assume: ConstraintSet, prop: Property, bound: Bound, stats: Optional[VerifierStats]):
        self.sts = sts
        self.positive = [PrefixMatcher(w) for w in assume.positive]
        self.blocked = [PrefixMatcher(w) for w in assume.blocked]
        self.prop = prop
        self.avoid = _pruning(prop)
        self.depth = bound.max_len
        self.wanted = bound.lengths()
        self.stats = stats
        self.dead: set[tuple] = set()

    def find(self) -> Optional[Trace]:
        positive = tuple(m.initial for m in self.positive)
        blocked = tuple(m.initial for m in self.blocked)
        for state in self.sts.initial_states():
            found = self._visit(Trace((state,)), positive, blocked, False)
            if found is not None:
                return found
        return None

    def _visit(self, trace: Trace, positive: tuple, blocked: tuple, left: bool) -> Optional[Trace]:
        if self.stats is not None:
            self.stats.nodes += 1
        last: State = trace.states[-1]
        if self.avoid is not None and not self.avoid.holds_at(last):
            return None
        blocked = tuple(m.advance(s, last) for m, s in zip(self.blocked, blocked))
        if any(s is MATCHED for s in blocked):
            return None
        positive = tuple(m.advance(s, last) for m, s in zip(self.positive, positive))
        left = left or not self.prop.holds_at(last)
        key = (trace.length, last, positive, blocked, left)
        if key in self.dead:
            return None
        # witnesses violate prop: G(expr) by leaving expr, its negation by never leaving it
        if trace.length in self.wanted and all(s is MATCHED for s in positive) and left != self.prop.negated:
            return trace
        if trace.length < self.depth:
            for state in self.sts.successors(last):
                found = self._visit(trace.extend(state), positive, blocked, left)
                if found is not None:
                    return found
        self.dead.add(key)
        return None


def _summarizable(assume: ConstraintSet) -> bool:
    return all(builtin_only(w) for w in (*assume.positive, *assume.blocked))


def _traces(sts: SymbolicTransitionSystem, bound: Bound, assume: ConstraintSet, avoid: Optional[Property] = None, stats: Optional[VerifierStats] = None) -> Iterator[Trace]:
    if bound.exact:
        yield from _Search(sts, assume, bound.max_len, bound.lengths(), avoid, stats).run()
        return
    for length in bound.lengths():
        search = _Search(sts, assume, length, range(length, length + 1), avoid, stats)
        yield from search.run()
        if not search.reached:
            return


def enumerate_traces(sts: SymbolicTransitionSystem, bound: Bound, assume: ConstraintSet = NO_ASSUMPTIONS) -> Iterator[Trace]:
    """Every bounded trace satisfying all positive and no blocked constraints, in canonical order."""
    return _traces(sts, bound, assume)


def _pruning(prop: Property) -> Optional[Property]:
    # a trace violating the negated invariant never leaves the invariant
    return Property(prop.name, prop.expr) if prop.negated else None


@log_errors(logger, "Verifier", "verify")
def verify(sts: SymbolicTransitionSystem, assume: ConstraintSet, prop: Property, bound: Bound, *, canonical: bool = True, stats: Optional[VerifierStats] = None) -> VerifyOutcome:
    """OK when every bounded trace under `assume` satisfies `prop`.

    Otherwise the outcome carries the first violating trace in canonical order.
    With `canonical=False` a single depth-first pass returns whichever witness
    it meets first, which is enough for existence checks.

    Built-in-only assumptions are first checked with a summarizing search;
    the canonical pass then only runs when a witness is known to exist.
    """
    started = time.perf_counter()
    avoid = _pruning(prop)
    try:
        if _summarizable(assume):
            witness = _SummarySearch(sts, assume, prop, bound, stats).find()
            if witness is None:
                return OK
            if not canonical:
                return VerifyOutcome(Status.VIOLATED, witness)
        if canonical:
            candidates = _traces(sts, bound, assume, avoid, stats)
        else:
            candidates = _Search(sts, assume, bound.max_len, bound.lengths(), avoid, stats).run()
        for trace in candidates:
            if not prop.satisfied_by(trace):
                return VerifyOutcome(Status.VIOLATED, trace)
        return OK
    finally:
        if stats is not None:
            stats.calls += 1
            stats.seconds += time.perf_counter() - started


def counterexample(sts: SymbolicTransitionSystem, assume: ConstraintSet, prop: Property, bound: Bound, stats: Optional[VerifierStats] = None) -> Optional[Trace]:
    """The canonical witness of `verify`, or None."""
    return verify(sts, assume, prop, bound, stats=stats).witness


def count_counterexamples(sts: SymbolicTransitionSystem, prop: Property, bound: Bound, assume: ConstraintSet = NO_ASSUMPTIONS) -> int:
    """Number of distinct bounded traces violating `prop`."""
    total = sum(1 for trace in _traces(sts, bound, assume, _pruning(prop)) if not prop.satisfied_by(trace))
    log(logger, "Verifier", "debug", "count", f"{total} counterexamples of {prop} at bound {bound}")
    return total


def counterexamples(sts: SymbolicTransitionSystem, prop: Property, bound: Bound, assume: ConstraintSet = NO_ASSUMPTIONS) -> Iterator[Trace]:
    """The bounded counterexample set P, in canonical order."""
    return (t for t in _traces(sts, bound, assume, _pruning(prop)) if not prop.satisfied_by(t))


__all__ = [
    "Bound",
    "OK",
    "Status",
    "VerifierStats",
    "VerifyOutcome",
    "count_counterexamples",
    "counterexample",
    "counterexamples",
    "enumerate_traces",
    "verify",
]
