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
"""Run configuration and the report a command produces.

Both are pydantic models: the configuration is validated once on
construction and the report serializes itself to the structured (JSON) form.
The text form is rendered from the same fields.
"""

from pathlib import Path
from typing import Any, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .classify import Classification
from .constants import DEFAULT_BOUND, DEFAULT_EQ_WINDOW, DEFAULT_MAX_ARITY, SCHEMA_VERSION, OutputFormat
from .errors import ClassifyError
from .factgen import FactConfig
from .kernel import Trace, Value, render_value
from .verifier import Bound, VerifierStats

JsonValue = Union[bool, int, str, list[str]]


class RunConfig(BaseModel):
    """Everything a command needs besides the model itself."""
    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    model: Optional[Path] = None
    corpus: Optional[str] = None
    property_name: Optional[str] = Field(default=None, alias="property")
    predicates: tuple[str, ...] = ()
    bound: Optional[int] = Field(default=None, ge=0)
    exact_length: bool = False
    max_arity: int = Field(default=DEFAULT_MAX_ARITY, ge=1)
    eq_window: Optional[int] = Field(default=DEFAULT_EQ_WINDOW, ge=1)
    seed: Optional[str] = None
    witnesses: bool = True
    output_format: OutputFormat = Field(default="text", alias="format")
    out: Optional[Path] = None

    @model_validator(mode="after")
    def _one_source(self) -> "RunConfig":
        if (self.model is None) == (self.corpus is None):
            raise ValueError("give exactly one of a model file or a corpus name")
        return self

    @property
    def fact_config(self) -> FactConfig:
        return FactConfig(max_arity=self.max_arity, eq_window=self.eq_window)

    @property
    def trace_bound(self) -> Bound:
        return Bound(DEFAULT_BOUND if self.bound is None else self.bound, exact=self.exact_length)

    def echo(self) -> dict[str, Any]:
        return self.model_dump(mode="json", by_alias=True)


def _json_value(value: Value) -> JsonValue:
    if isinstance(value, frozenset):
        return sorted(value)
    return value


class TraceView(BaseModel):
    """A trace as a list of states, each a variable -> value mapping."""
    states: list[dict[str, JsonValue]]

    @classmethod
    def of(cls, trace: Trace) -> "TraceView":
        return cls(states=[{k: _json_value(v) for k, v in state.items()} for state in trace])

    def render(self, indent: str = "    ") -> list[str]:
        lines = []
        for index, state in enumerate(self.states):
            values = ", ".join(f"{k}={_render(v)}" for k, v in state.items())
            lines.append(f"{indent}{index}: {values}")
        return lines


def _render(value: JsonValue) -> str:
    if isinstance(value, list):
        return render_value(frozenset(value))
    return render_value(value)


def _setting(value: Any) -> str:
    """A config or summary value as the text report prints it."""
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(str(v) for v in value) + "]"
    return str(value)


class ClassView(BaseModel):
    index: int
    constraint: str
    representative: TraceView
    canonical_witness: Optional[TraceView] = None


class Summary(BaseModel):
    classes: int
    discovered: int
    removed: list[str] = []
    counterexamples: Optional[int] = None
    capped: bool = False
    verifier_calls: int = 0
    verifier_ms: float = 0.0
    other_ms: float = 0.0


class ErrorView(BaseModel):
    kind: str
    message: str
    trace: Optional[TraceView] = None
    capped: bool = False

    @classmethod
    def of(cls, error: Exception) -> "ErrorView":
        if isinstance(error, ClassifyError):
            trace = TraceView.of(error.trace) if error.trace is not None else None
            return cls(kind=error.kind, message=str(error), trace=trace, capped=error.capped)
        return cls(kind=type(error).__name__, message=str(error))


class Report(BaseModel):
    """Result of one command, in a form that renders as text or JSON."""
    schema_version: str = SCHEMA_VERSION
    command: str
    config: dict[str, Any] = {}
    status: Optional[str] = None
    count: Optional[int] = None
    traces: list[TraceView] = []
    classes: list[ClassView] = []
    summary: Optional[Summary] = None
    error: Optional[ErrorView] = None

    @classmethod
    def of_classification(
        cls,
        config: RunConfig,
        result: Classification,
        stats: VerifierStats,
        elapsed: float,
        counterexamples: Optional[int] = None,
    ) -> "Report":
        classes = [
            ClassView(
                index=i,
                constraint=entry.constraint.render(),
                representative=TraceView.of(entry.representative),
                canonical_witness=TraceView.of(entry.canonical_witness) if entry.canonical_witness else None,
            )
            for i, entry in enumerate(result, start=1)
        ]
        summary = Summary(
            classes=len(result),
            discovered=result.discovered,
            removed=[entry.constraint.render() for entry in result.removed],
            counterexamples=counterexamples,
            capped=result.capped,
            verifier_calls=stats.calls,
            verifier_ms=round(stats.millis, 3),
            other_ms=round(max(elapsed - stats.seconds, 0.0) * 1000.0, 3),
        )
        return cls(command="classify", config=config.echo(), classes=classes, summary=summary)

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)

    def to_text(self) -> str:
        lines: list[str] = []
        source = self.config.get("corpus") or self.config.get("model")
        if source:
            lines.append(f"{self.command}: {source}, property {self.config.get('property') or '(default)'}, bound {self.config.get('bound')}")
        lines.append(f"schema version: {self.schema_version}")
        if self.config:
            lines.append("config:")
            lines.extend(f"  {key}: {_setting(value)}" for key, value in self.config.items())
        if self.status is not None:
            lines.append(f"status: {self.status}")
        if self.count is not None:
            lines.append(f"counterexamples: {self.count}")
        for number, trace in enumerate(self.traces, start=1):
            lines.append(f"trace {number}:")
            lines.extend(trace.render())
        for view in self.classes:
            lines.append(f"class {view.index}: {view.constraint}")
            lines.append("  representative:")
            lines.extend(view.representative.render())
            if view.canonical_witness is not None:
                lines.append("  canonical counterexample:")
                lines.extend(view.canonical_witness.render())
        if self.summary is not None:
            s = self.summary
            lines.append(f"classes: {s.classes} (discovered {s.discovered}, removed {len(s.removed)})")
            for removed in s.removed:
                lines.append(f"  removed as redundant: {removed}")
            if s.counterexamples is not None:
                lines.append(f"counterexamples at bound: {s.counterexamples}")
            lines.append(f"fact generation capped: {_setting(s.capped)}")
            lines.append(f"time: verifier {s.verifier_ms:.1f} ms over {s.verifier_calls} calls, other {s.other_ms:.1f} ms")
        if self.error is not None:
            lines.append(f"error ({self.error.kind}): {self.error.message}")
            if self.error.trace is not None:
                lines.append("  offending trace:")
                lines.extend(self.error.trace.render())
        return "\n".join(lines) + "\n"

    def render(self, output_format: OutputFormat) -> str:
        return self.to_json() + "\n" if output_format == "structured" else self.to_text()


__all__ = [
    "ClassView",
    "ErrorView",
    "Report",
    "RunConfig",
    "Summary",
    "TraceView",
]
