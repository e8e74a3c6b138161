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

"""The classification loop, redundancy removal and canonical counterexamples.

`classify` repeatedly asks the verifier for a counterexample that no known
class covers, generalizes it into a trace constraint over V, minimizes that
constraint and blocks it. The result depends on discovery order; a different
order can give a different, equally valid set of classes.

The `*_semantic` helpers work on explicit finite trace sets and serve as
oracles for the symbolic operations.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Collection, Hashable, Iterator, Optional, Sequence, TypeVar

from .errors import ClassifyError, ConfigError, InsufficientFacts, InsufficientPredicates, InvariantBreach, NoAcceptingTrace, log, log_errors
from .factgen import AtomicFact, FactConfig, ParamSpec, PosArg, PredicateDef, Schema, VarAt, facts
from .kernel import Property, SymbolicTransitionSystem, Trace
from .tracecon import NO_ASSUMPTIONS, ConstraintSet, TraceConstraint, implies_violation, minimize_tc, satisfies, trace_constraint
from .verifier import Bound, VerifierStats, counterexample, enumerate_traces, verify

logger = logging.getLogger(__name__)

T = TypeVar("T", bound=Hashable)


@dataclass(frozen=True)
class ClassEntry:
    """One class: its constraint, the counterexample that spawned it, and a canonical witness."""
    constraint: TraceConstraint
    representative: Trace
    canonical_witness: Optional[Trace] = None


@dataclass(frozen=True)
class Classification:
    classes: tuple[ClassEntry, ...]
    bound: Bound
    predicates: tuple[str, ...] = ()
    discovered: int = 0
    removed: tuple[ClassEntry, ...] = ()
    capped: bool = False
    # W before redundancy removal, in discovery order
    discovered_constraints: tuple[TraceConstraint, ...] = ()

    @property
    def constraints(self) -> list[TraceConstraint]:
        return [entry.constraint for entry in self.classes]

    def __iter__(self) -> Iterator[ClassEntry]:
        return iter(self.classes)

    def __len__(self) -> int:
        return len(self.classes)

    def __getitem__(self, index: int) -> ClassEntry:
        return self.classes[index]


def block(W: Sequence[TraceConstraint]) -> ConstraintSet:
    """Admit exactly the traces satisfying no member of W."""
    return ConstraintSet(blocked=tuple(W))


def seed_constraints(pred: PredicateDef, schema: Schema) -> list[TraceConstraint]:
    """Every typechecking instantiation of a user predicate, each parameter at its own position variable."""
    if pred.builtin:
        raise ConfigError(f"seed predicate must be user-defined, got built-in '{pred.name}'")

    def pool(index: int, param: ParamSpec) -> list:
        if param.kind == "pos":
            return [PosArg(index)]
        names = schema.records if param.kind == "record" else schema.var_names
        return [VarAt(v, index) for v in names if param.accepts_var(v, schema)]

    pools = [pool(i, p) for i, p in enumerate(pred.params)]
    return [TraceConstraint(pred.arity, (AtomicFact(pred, args),)) for args in itertools.product(*pools)]


def _redundant_mask(sts: SymbolicTransitionSystem, W: Sequence[TraceConstraint], prop: Property, bound: Bound, stats: Optional[VerifierStats]) -> list[bool]:
    """Greedy scan in order: drop a class when the remaining ones still block every counterexample."""
    kept = list(range(len(W)))
    for index in range(len(W)):
        others = [W[k] for k in kept if k != index]
        if verify(sts, block(others), prop, bound, canonical=False, stats=stats).ok:
            kept.remove(index)
    kept_set = set(kept)
    return [index not in kept_set for index in range(len(W))]


@log_errors(logger, "Classify", "remove_redundant")
def remove_redundant(sts: SymbolicTransitionSystem, W: Sequence[TraceConstraint], prop: Property, bound: Bound, stats: Optional[VerifierStats] = None) -> list[TraceConstraint]:
    """Drop classes whose counterexamples the other classes already cover."""
    mask = _redundant_mask(sts, W, prop, bound, stats)
    return [w for w, redundant in zip(W, mask) if not redundant]


def canonical_counterexample(sts: SymbolicTransitionSystem, W: Sequence[TraceConstraint], w: TraceConstraint, bound: Bound) -> Optional[Trace]:
    """First bounded trace satisfying w and no other member of W."""
    others = list(W)
    try:
        others.remove(w)
    except ValueError:
        raise ValueError(f"{w} is not a member of W") from None
    return next(iter(enumerate_traces(sts, bound, ConstraintSet(positive=(w,), blocked=tuple(others)))), None)


@log_errors(logger, "Classify", "classify")
def classify(
    sts: SymbolicTransitionSystem,
    prop: Property,
    predicates: Sequence[PredicateDef],
    bound: Bound,
    *,
    schema: Optional[Schema] = None,
    config: FactConfig = FactConfig(),
    seed: Optional[PredicateDef] = None,
    witnesses: bool = True,
    stats: Optional[VerifierStats] = None,
) -> Classification:
    """Classify every bounded counterexample of `prop` with trace constraints over `predicates`.

    Args:
        sts: The system under analysis
        prop: Invariant whose counterexamples are classified
        predicates: V, in the order that fixes fact and deletion order
        bound: Trace-length bound
        schema: Variable domains and record groupings (defaults to the system's)
        config: Fact-generation caps
        seed: Optional user predicate whose instantiations are explored first
        witnesses: Whether to search a canonical counterexample per class
        stats: Shared verifier counters

    Raises:
        NoAcceptingTrace: Every bounded trace violates the property
        InsufficientFacts: No fact of V holds on some counterexample
        InsufficientPredicates: The facts of V on some counterexample do not force a violation
    """
    schema = schema or Schema.of(sts)
    if verify(sts, NO_ASSUMPTIONS, prop.negate(), bound, canonical=False, stats=stats).ok:
        raise NoAcceptingTrace("every bounded trace violates the property; nothing to classify against")

    W: list[TraceConstraint] = []
    representatives: list[Trace] = []
    capped = False

    def discover(trace: Trace) -> None:
        nonlocal capped
        gamma = facts(trace, predicates, schema, config)
        capped |= gamma.capped
        if not gamma:
            raise InsufficientFacts(trace, gamma.capped)
        w = trace_constraint(gamma, trace)
        if not implies_violation(sts, w, prop, bound, stats):
            raise InsufficientPredicates(trace, gamma.capped)
        minimal = minimize_tc(sts, w, prop, bound, stats)
        if not satisfies(trace, minimal):
            raise InvariantBreach(f"counterexample {trace} does not satisfy its own class {minimal}")
        W.append(minimal)
        representatives.append(trace)
        log(logger, "Classify", "info", "classify", f"class {len(W)}: {minimal} (from {len(gamma)} facts)")

    for positive in seed_constraints(seed, schema) if seed is not None else ():
        while (trace := counterexample(sts, ConstraintSet((positive,), tuple(W)), prop, bound, stats)) is not None:
            discover(trace)
    while (trace := counterexample(sts, block(W), prop, bound, stats)) is not None:
        discover(trace)

    mask = _redundant_mask(sts, W, prop, bound, stats)
    kept = [i for i, redundant in enumerate(mask) if not redundant]
    for i, redundant in enumerate(mask):
        if redundant:
            log(logger, "Classify", "info", "remove_redundant", f"dropping {W[i]}")
    final = [W[i] for i in kept]

    entries = []
    for i in kept:
        witness = canonical_counterexample(sts, final, W[i], bound) if witnesses else None
        if witnesses and witness is None:
            raise InvariantBreach(f"kept class {W[i]} has no canonical counterexample")
        entries.append(ClassEntry(W[i], representatives[i], witness))
    removed = tuple(ClassEntry(W[i], representatives[i]) for i, redundant in enumerate(mask) if redundant)
    return Classification(
        classes=tuple(entries),
        bound=bound,
        predicates=tuple(p.name for p in predicates),
        discovered=len(W),
        removed=removed,
        capped=capped,
        discovered_constraints=tuple(W),
    )


# --- Oracles over explicit trace sets ---

def _covered(classes: Sequence[Collection[T]], index: int, among: Sequence[int]) -> bool:
    union: set[T] = set()
    for k in among:
        if k != index:
            union.update(classes[k])
    return set(classes[index]) <= union


def redundant_classes_semantic(classes: Sequence[Collection[T]]) -> list[int]:
    """Indices of classes contained in the union of the others."""
    everyone = range(len(classes))
    return [i for i in everyone if _covered(classes, i, everyone)]


def is_redundant_semantic(classes: Sequence[Collection[T]]) -> bool:
    return bool(redundant_classes_semantic(classes))


def make_nonredundant_semantic(classes: Sequence[Collection[T]]) -> list[Collection[T]]:
    """Remove, in order, each class covered by the classes still kept."""
    kept = list(range(len(classes)))
    for i in range(len(classes)):
        if _covered(classes, i, kept):
            kept.remove(i)
    return [classes[i] for i in kept]


def canonical_member_semantic(classes: Sequence[Collection[T]], index: int) -> Optional[T]:
    """A member of class `index` that lies in no other class, if any."""
    others: set[T] = set()
    for k, members in enumerate(classes):
        if k != index:
            others.update(members)
    alone = [m for m in classes[index] if m not in others]
    return min(alone, key=str) if alone else None


__all__ = [
    "ClassEntry",
    "Classification",
    "ClassifyError",
    "block",
    "canonical_counterexample",
    "canonical_member_semantic",
    "classify",
    "is_redundant_semantic",
    "make_nonredundant_semantic",
    "redundant_classes_semantic",
    "remove_redundant",
    "seed_constraints",
]
