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
"""Bundled models, predicate libraries and their recorded results.

Models (`.ccm`) and libraries (`.ccp`) ship inside the package under
`bundled/`. Each model's YAML frontmatter names its invariant, its default
predicate set and the classifications it is known to produce.
"""

import logging
from dataclasses import dataclass, field
from importlib.resources import files
from importlib.resources.abc import Traversable
from pathlib import Path
from typing import Any, Iterator, Mapping, Optional, Sequence, Union

from .constants import BUILTIN_ALIASES, LIBRARY_SUFFIX, MODEL_SUFFIX
from .errors import CexClassError, ConfigError, CorpusError, ParseError, log, log_errors
from .factgen import BUILTINS, PredicateDef
from .kernel import Property
from .parser import Library, ModelFile, parse_library, parse_model

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _names(value: Any, what: str) -> tuple[str, ...]:
    if value is None:
        return ()
    if isinstance(value, str):
        return (value,)
    if not isinstance(value, (list, tuple)):
        raise CorpusError(f"{what} must be a list of names")
    return tuple(str(v) for v in value)


@dataclass(frozen=True)
class Expectation:
    """A recorded classification: the predicate set, the bound and what came out."""
    predicates: tuple[str, ...]
    bound: int
    classes: Optional[int] = None
    constraints: tuple[str, ...] = ()
    seed: Optional[str] = None
    error: Optional[str] = None

    @classmethod
    def from_metadata(cls, data: Mapping[str, Any]) -> "Expectation":
        if not isinstance(data, Mapping):
            raise CorpusError("expected entries must be mappings")
        try:
            bound = int(data["bound"])
        except (KeyError, TypeError, ValueError):
            raise CorpusError("expected entry needs an integer 'bound'") from None
        if ("classes" in data) == ("error" in data):
            raise CorpusError("expected entry needs exactly one of 'classes' or 'error'")
        classes = data.get("classes")
        return cls(
            predicates=_names(data.get("predicates"), "predicates"),
            bound=bound,
            classes=None if classes is None else int(classes),
            constraints=_names(data.get("constraints"), "constraints"),
            seed=data.get("seed"),
            error=data.get("error"),
        )


@dataclass
class CorpusEntry:
    """One bundled model together with its frontmatter."""
    name: str
    model: ModelFile
    property_name: str
    predicates: tuple[str, ...] = ()
    bound: int = 2
    description: str = ""
    expected: tuple[Expectation, ...] = ()
    counterexamples: dict[int, int] = field(default_factory=dict)
    corpus: Optional["Corpus"] = field(default=None, repr=False, compare=False)

    @property
    def invariant(self) -> Property:
        return self.model.get_property(self.property_name)

    def predicate_set(self, names: Optional[Sequence[str]] = None) -> list[PredicateDef]:
        """V for this model; defaults to the predicates named in the frontmatter."""
        return resolve_predicates(self.predicates if names is None else names, self.model, self.corpus)


def _entry(name: str, source: str, corpus: Optional["Corpus"]) -> CorpusEntry:
    model = parse_model(source)
    meta = model.metadata
    property_name = str(meta.get("property") or next(iter(model.properties), "true"))
    model.get_property(property_name)
    counts = meta.get("counterexamples") or {}
    if not isinstance(counts, Mapping):
        raise CorpusError(f"{name}: 'counterexamples' must map bounds to counts")
    return CorpusEntry(
        name=str(meta.get("name", name)),
        model=model,
        property_name=property_name,
        predicates=_names(meta.get("predicates"), "predicates"),
        bound=int(meta.get("bound", 2)),
        description=str(meta.get("description", "")).strip(),
        expected=tuple(Expectation.from_metadata(e) for e in meta.get("expected") or ()),
        counterexamples={int(k): int(v) for k, v in counts.items()},
        corpus=corpus,
    )


class Corpus:
    """Collection of the corpus files in one directory.

    Models are parsed on first access; libraries are parsed against the model
    that asks for them, since their predicates refer to its variables.
    """

    def __init__(self, root: Optional[Union[PathLike, Traversable]] = None):
        if root is None:
            root = files("cexclass") / "bundled"
        elif isinstance(root, str):
            root = Path(root)
        self.root = root
        self._entries: dict[str, CorpusEntry] = {}

    def _files(self, suffix: str) -> dict[str, Traversable]:
        if not self.root.is_dir():
            raise CorpusError(f"corpus directory {self.root} does not exist")
        found = {f.name[: -len(suffix)]: f for f in self.root.iterdir() if f.name.endswith(suffix)}
        return dict(sorted(found.items()))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self._files(MODEL_SUFFIX))

    @property
    def library_names(self) -> tuple[str, ...]:
        return tuple(self._files(LIBRARY_SUFFIX))

    def __iter__(self) -> Iterator[CorpusEntry]:
        """Iterate over every model that loads; broken files are logged and skipped."""
        for name in self.names:
            try:
                yield self.load(name)
            except CexClassError as e:
                log(logger, "Corpus", "error", "load", f"Failed to load {name}: {e}")

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name: str) -> bool:
        return name in self._files(MODEL_SUFFIX)

    def get(self, name: str) -> Optional[CorpusEntry]:
        """Entry by name, or None if there is no such model."""
        return self.load(name) if name in self else None

    @log_errors(logger, "Corpus", "load")
    def load(self, name: str) -> CorpusEntry:
        if name in self._entries:
            return self._entries[name]
        models = self._files(MODEL_SUFFIX)
        if name not in models:
            known = ", ".join(models) or "none"
            raise CorpusError(f"unknown corpus model '{name}' (available: {known})")
        try:
            entry = _entry(name, models[name].read_text(encoding="utf-8"), self)
        except ParseError as e:
            raise CorpusError(f"{name}{MODEL_SUFFIX}:{e}") from e
        except ConfigError as e:
            raise CorpusError(f"{name}: {e}") from e
        self._entries[name] = entry
        log(logger, "Corpus", "debug", "load", f"Loaded '{name}' ({len(entry.expected)} recorded results)")
        return entry

    def library(self, name: str, model: ModelFile) -> Library:
        libraries = self._files(LIBRARY_SUFFIX)
        if name not in libraries:
            raise CorpusError(f"unknown predicate library '{name}'")
        return parse_library(libraries[name].read_text(encoding="utf-8"), model)

    def libraries_for(self, model: ModelFile) -> Iterator[Library]:
        """Libraries whose predicates typecheck against the model."""
        for name in self.library_names:
            try:
                yield self.library(name, model)
            except ParseError as e:
                log(logger, "Corpus", "debug", "libraries_for", f"'{name}' does not apply to {model.name}: {e}")


_default: Optional[Corpus] = None


def default_corpus() -> Corpus:
    global _default
    if _default is None:
        _default = Corpus()
    return _default


def load_corpus(name: str) -> CorpusEntry:
    """Load a bundled model by name.

    Raises:
        CorpusError: Unknown name or a bundled file that does not parse
    """
    return default_corpus().load(name)


def resolve_predicates(names: Sequence[str], model: ModelFile, corpus: Optional[Corpus] = None) -> list[PredicateDef]:
    """Turn a list of predicate names into V, keeping order and dropping repeats.

    A name may be a built-in symbol (`=`, `<`, `!=`, `true` and their
    spellings), a predicate of the model, a library name (all its members)
    or a predicate defined in a library.
    """
    corpus = corpus or default_corpus()
    result: dict[PredicateDef, None] = {}
    libraries: Optional[list[Library]] = None
    for raw in names:
        name = raw.strip()
        if name in BUILTIN_ALIASES:
            result.setdefault(BUILTINS[BUILTIN_ALIASES[name]], None)
        elif name in model.predicates:
            result.setdefault(model.predicates[name], None)
        elif name in corpus.library_names:
            for pred in corpus.library(name, model).members():
                result.setdefault(pred, None)
        else:
            if libraries is None:
                libraries = list(corpus.libraries_for(model))
            pred = next((lib.predicates[name] for lib in libraries if name in lib.predicates), None)
            if pred is None:
                raise ConfigError(f"unknown predicate '{name}' for model {model.name}")
            result.setdefault(pred, None)
    return list(result)


__all__ = [
    "Corpus",
    "CorpusEntry",
    "Expectation",
    "default_corpus",
    "load_corpus",
    "resolve_predicates",
]
