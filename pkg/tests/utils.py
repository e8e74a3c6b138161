"""Brute-force oracles for cexclass tests.

These enumerate naively over whole domains so they share no search code
with the package: initial states and successors are found by testing every
assignment, and constraint bindings by trying every tuple of positions.
"""

import itertools
from collections import Counter
from typing import Iterator, Optional

from cexclass.factgen import eval_fact
from cexclass.kernel import Property, State, SymbolicTransitionSystem, Trace, eval_state, eval_transition
from cexclass.tracecon import TraceConstraint


def all_states(sts: SymbolicTransitionSystem) -> list[State]:
    """Every assignment, in declaration-major domain order."""
    names = sts.var_names
    pools = [sts.domains[n].values for n in names]
    return [State(dict(zip(names, combo))) for combo in itertools.product(*pools)]


def brute_traces(sts: SymbolicTransitionSystem, max_len: int, exact: bool = False) -> list[Trace]:
    """Every trace with at most (or exactly) `max_len` transitions, shortest first."""
    states = all_states(sts)
    layer = [Trace.of(s) for s in states if eval_state(sts.init, s) is True]
    result: list[Trace] = []
    for length in range(max_len + 1):
        if not exact or length == max_len:
            result.extend(layer)
        layer = [t.extend(s) for t in layer for s in states if eval_transition(sts.trans, t.states[-1], s)]
    return result


def brute_counterexamples(sts: SymbolicTransitionSystem, prop: Property, max_len: int, exact: bool = False) -> list[Trace]:
    return [t for t in brute_traces(sts, max_len, exact) if not prop.satisfied_by(t)]


def brute_bindings(trace: Trace, w: TraceConstraint) -> Iterator[tuple[int, ...]]:
    """Every position binding under which all conjuncts hold."""
    for binding in itertools.product(trace.positions, repeat=w.position_vars):
        if all(eval_fact(f, trace, binding) for f in w.conjuncts):
            yield binding


def brute_satisfies(trace: Trace, w: TraceConstraint) -> bool:
    return next(brute_bindings(trace, w), None) is not None


def brute_class(sts: SymbolicTransitionSystem, w: TraceConstraint, max_len: int) -> frozenset[Trace]:
    """c(w) at the bound by filtering every trace."""
    return frozenset(t for t in brute_traces(sts, max_len) if brute_satisfies(t, w))


def first_counterexample(sts: SymbolicTransitionSystem, prop: Property, max_len: int) -> Optional[Trace]:
    return next(iter(brute_counterexamples(sts, prop, max_len)), None)


def trace_counts(sts: SymbolicTransitionSystem, max_len: int) -> list[int]:
    """Number of traces with at most k transitions, for k = 0..max_len, by counting paths."""
    states = all_states(sts)
    successors = {s: [t for t in states if eval_transition(sts.trans, s, t)] for s in states}
    layer = Counter(s for s in states if eval_state(sts.init, s) is True)
    totals = [sum(layer.values())]
    for _ in range(max_len):
        following: Counter = Counter()
        for state, paths in layer.items():
            for target in successors[state]:
                following[target] += paths
        layer = following
        totals.append(totals[-1] + sum(layer.values()))
    return totals


def feasible_bound(sts: SymbolicTransitionSystem, max_len: int, limit: int) -> int:
    """The largest bound up to `max_len` with at most `limit` traces (0 at least)."""
    totals = trace_counts(sts, max_len)
    return max((k for k, total in enumerate(totals) if total <= limit), default=0)
