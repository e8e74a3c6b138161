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
"""cexclass - classify the bounded counterexamples of a transition system by trace constraints."""

from .kernel import Domain, State, Trace, Property, SymbolicTransitionSystem
from .parser import ModelFile, parse_model, parse_constraint
from .factgen import AtomicFact, FactConfig, PredicateDef, Schema, facts
from .tracecon import TraceConstraint, ConstraintSet, satisfies, minimize_tc
from .verifier import Bound, VerifierStats, verify, count_counterexamples
from .classify import Classification, ClassEntry, classify, remove_redundant
from .corpus import Corpus, CorpusEntry, load_corpus, resolve_predicates
from .report import Report, RunConfig
from .errors import (
    CexClassError,
    ParseError,
    ConfigError,
    CorpusError,
    ClassifyError,
    InsufficientPredicates,
    InsufficientFacts,
    NoAcceptingTrace,
    InvariantBreach,
)

__version__ = "0.1.0"

__all__ = [
    # Systems and traces
    "Domain",
    "State",
    "Trace",
    "Property",
    "SymbolicTransitionSystem",

    # Models
    "ModelFile",
    "parse_model",
    "parse_constraint",

    # Facts and constraints
    "AtomicFact",
    "FactConfig",
    "PredicateDef",
    "Schema",
    "facts",
    "TraceConstraint",
    "ConstraintSet",
    "satisfies",
    "minimize_tc",

    # Verification
    "Bound",
    "VerifierStats",
    "verify",
    "count_counterexamples",

    # Classification
    "Classification",
    "ClassEntry",
    "classify",
    "remove_redundant",

    # Corpus and reports
    "Corpus",
    "CorpusEntry",
    "load_corpus",
    "resolve_predicates",
    "Report",
    "RunConfig",

    # Errors
    "CexClassError",
    "ParseError",
    "ConfigError",
    "CorpusError",
    "ClassifyError",
    "InsufficientPredicates",
    "InsufficientFacts",
    "NoAcceptingTrace",
    "InvariantBreach",
]
