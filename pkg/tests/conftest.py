"""Shared test fixtures for cexclass tests."""

import logging
import os
import sys

import pytest

from cexclass.corpus import Corpus, CorpusEntry, load_corpus
from cexclass.factgen import BUILTINS, Schema
from cexclass.kernel import BinOp, Const, Domain, Not, Property, SymbolicTransitionSystem, Var, VarDecl
from cexclass.parser import ModelFile, parse_model

# Add the project root directory to the Python path
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, project_root)

logger = logging.getLogger(__name__)

COUNTER_SOURCE = """\
model Counter

vars
  a: int[-3..3]

init
  a = 1

trans
  a' = a + 1 or a' = a - 1 or a' = a

invariant StaysAtOne: a = 1

pred lessThanOne[x: int] { x < 1 }

pred greaterThanOne[x: int] { x > 1 }
"""


@pytest.fixture
def counter_source() -> str:
    """Source of the counter model without frontmatter."""
    return COUNTER_SOURCE


@pytest.fixture
def counter_model() -> ModelFile:
    """The counter model parsed from source."""
    return parse_model(COUNTER_SOURCE)


@pytest.fixture
def counter_entry() -> CorpusEntry:
    """The bundled counter model with its frontmatter."""
    return load_corpus("counter")


@pytest.fixture
def running_entry() -> CorpusEntry:
    """The bundled eavesdropper model."""
    return load_corpus("running-example")


@pytest.fixture
def bundled() -> Corpus:
    """A fresh loader over the bundled directory."""
    return Corpus()


@pytest.fixture
def toggle_system() -> SymbolicTransitionSystem:
    """One boolean that flips at every step, starting false.

    Built from expression nodes directly so kernel tests do not depend on the parser.
    """
    b, b_next = Var("b"), Var("b", primed=True)
    return SymbolicTransitionSystem(
        vars=(VarDecl("b", Domain.boolean()),),
        init=BinOp("=", b, Const(False)),
        trans=BinOp("=", b_next, Not(b)),
    )


@pytest.fixture
def toggle_never_true() -> Property:
    """G(not b): violated as soon as the toggle flips once."""
    return Property("NeverTrue", Not(Var("b")))


@pytest.fixture
def free_pair() -> SymbolicTransitionSystem:
    """Two unconstrained variables: a boolean and a three-valued enumeration."""
    return SymbolicTransitionSystem(
        vars=(VarDecl("flag", Domain.boolean()), VarDecl("colour", Domain.enum(("Red", "Green", "Blue")))),
    )


@pytest.fixture
def free_pair_schema(free_pair) -> Schema:
    return Schema.of(free_pair)


@pytest.fixture
def generic():
    """V made of the equality and ordering built-ins."""
    return [BUILTINS["="], BUILTINS["<"]]
