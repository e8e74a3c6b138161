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
"""Command-line front end: check, count, enumerate and classify."""

import argparse
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError

from . import __version__
from .classify import classify
from .constants import DEFAULT_PREDICATES, EXIT_INTERNAL, EXIT_OK, EXIT_UNCLASSIFIABLE, EXIT_USAGE
from .corpus import Corpus, default_corpus, load_corpus, resolve_predicates
from .errors import CexClassError, ClassifyError, ConfigError, InvariantBreach, log, log_errors
from .factgen import PredicateDef
from .kernel import Property
from .parser import ModelFile, parse_constraints, parse_model
from .report import ErrorView, Report, RunConfig, TraceView
from .tracecon import ConstraintSet, NO_ASSUMPTIONS, satisfies
from .verifier import VerifierStats, count_counterexamples, counterexamples, enumerate_traces, verify

logger = logging.getLogger(__name__)


@dataclass
class Session:
    """A loaded model with the run defaults filled in."""
    config: RunConfig
    model: ModelFile
    prop: Property
    predicates: list[PredicateDef]
    corpus: Corpus


@log_errors(logger, "CLI", "load")
def load_session(cfg: RunConfig) -> Session:
    """Load the model and fill property, predicates and bound from its frontmatter where unset."""
    if cfg.corpus is not None:
        entry = load_corpus(cfg.corpus)
        model, corpus = entry.model, entry.corpus or default_corpus()
        property_name, predicates, bound = entry.property_name, entry.predicates, entry.bound
    else:
        assert cfg.model is not None
        try:
            source = cfg.model.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read model file {cfg.model}: {e}") from e
        model, corpus = parse_model(source), default_corpus()
        meta = model.metadata
        property_name = str(meta.get("property") or next(iter(model.properties), "true"))
        predicates = tuple(meta.get("predicates") or DEFAULT_PREDICATES)
        bound = meta.get("bound")

    resolved = cfg.model_copy(update={
        "property_name": cfg.property_name or property_name,
        "predicates": cfg.predicates or tuple(predicates),
        "bound": cfg.bound if cfg.bound is not None else bound,
    })
    return Session(
        config=resolved,
        model=model,
        prop=model.get_property(resolved.property_name),
        predicates=resolve_predicates(resolved.predicates, model, corpus),
        corpus=corpus,
    )


def cmd_classify(cfg: RunConfig) -> tuple[Report, int]:
    """Classify the bounded counterexamples; exit 2 when V cannot characterize one of them."""
    started = time.perf_counter()
    session = load_session(cfg)
    config = session.config
    stats = VerifierStats()
    seed = None
    if config.seed:
        seed = resolve_predicates([config.seed], session.model, session.corpus)[0]
    try:
        result = classify(
            session.model.system,
            session.prop,
            session.predicates,
            config.trace_bound,
            schema=session.model.schema,
            config=config.fact_config,
            seed=seed,
            witnesses=config.witnesses,
            stats=stats,
        )
    except ClassifyError as e:
        return Report(command="classify", config=config.echo(), error=ErrorView.of(e)), EXIT_UNCLASSIFIABLE

    for index, entry in enumerate(result, start=1):
        if not satisfies(entry.representative, entry.constraint) or session.prop.satisfied_by(entry.representative):
            raise InvariantBreach(f"representative of class {index} does not re-validate against {entry.constraint}")
    total = count_counterexamples(session.model.system, session.prop, config.trace_bound)
    report = Report.of_classification(config, result, stats, time.perf_counter() - started, counterexamples=total)
    return report, EXIT_OK


def cmd_count(cfg: RunConfig) -> tuple[Report, int]:
    session = load_session(cfg)
    total = count_counterexamples(session.model.system, session.prop, session.config.trace_bound)
    return Report(command="count", config=session.config.echo(), count=total), EXIT_OK


def _blocked(session: Session, path: Path) -> ConstraintSet:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read block file {path}: {e}") from e
    known = dict(session.model.predicates)
    for lib in session.corpus.libraries_for(session.model):
        known.update(lib.predicates)
    known.update({p.name: p for p in session.predicates})
    return ConstraintSet(blocked=parse_constraints(text, known, session.model.schema))


def cmd_check(cfg: RunConfig, block: Optional[Path] = None) -> tuple[Report, int]:
    """Verify the property, optionally with trace constraints blocked."""
    session = load_session(cfg)
    assume = _blocked(session, block) if block is not None else NO_ASSUMPTIONS
    outcome = verify(session.model.system, assume, session.prop, session.config.trace_bound)
    traces = [TraceView.of(outcome.witness)] if outcome.witness is not None else []
    return Report(command="check", config=session.config.echo(), status=outcome.status.value, traces=traces), EXIT_OK


def cmd_enumerate(cfg: RunConfig, violating: bool = False) -> tuple[Report, int]:
    """List the bounded traces, or only the counterexamples."""
    session = load_session(cfg)
    sts, bound = session.model.system, session.config.trace_bound
    traces = counterexamples(sts, session.prop, bound) if violating else enumerate_traces(sts, bound)
    views = [TraceView.of(t) for t in traces]
    return Report(command="enumerate", config=session.config.echo(), count=len(views), traces=views), EXIT_OK


def _pred_list(values: Optional[Sequence[str]]) -> tuple[str, ...]:
    names: list[str] = []
    for value in values or ():
        names.extend(n.strip() for n in value.split(",") if n.strip())
    return tuple(names)


class _ArgumentParser(argparse.ArgumentParser):
    """Reports usage errors as ConfigError so `main` can map them to EXIT_USAGE."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise ConfigError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="cexclass", description="Classify the bounded counterexamples of a transition system")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = _ArgumentParser(add_help=False)
    source = common.add_mutually_exclusive_group(required=True)
    source.add_argument("--model", type=Path, help="model file (.ccm)")
    source.add_argument("--corpus", help="name of a bundled model")
    common.add_argument("--property", dest="property_name", help="invariant to check (default: from the model)")
    common.add_argument("--pred", action="append", help="predicates of V, comma separated; repeatable")
    common.add_argument("--bound", type=int, help="maximum trace length in transitions")
    common.add_argument("--exact-length", action="store_true", help="only traces of exactly --bound transitions")
    common.add_argument("--max-arity", type=int, default=None, help="largest predicate arity instantiated")
    common.add_argument("--eq-window", type=int, default=None, help="largest position distance for relational facts")
    common.add_argument("--format", dest="output_format", choices=("text", "structured"), default="text")
    common.add_argument("--out", type=Path, help="write the report here instead of stdout")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug logging")

    commands = parser.add_subparsers(dest="command", required=True)
    run = commands.add_parser("classify", parents=[common], help="classify all bounded counterexamples")
    run.add_argument("--seed", help="user predicate whose instantiations are explored first")
    run.add_argument("--no-witnesses", dest="witnesses", action="store_false", help="skip the canonical counterexample per class")
    check = commands.add_parser("check", parents=[common], help="verify the property at the bound")
    check.add_argument("--block", type=Path, help="file of trace constraints to exclude, one per line")
    commands.add_parser("count", parents=[common], help="count the bounded counterexamples")
    listing = commands.add_parser("enumerate", parents=[common], help="list the bounded traces")
    listing.add_argument("--violating", action="store_true", help="only list counterexamples")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = {
        "model": args.model,
        "corpus": args.corpus,
        "property_name": args.property_name,
        "predicates": _pred_list(args.pred),
        "bound": args.bound,
        "exact_length": args.exact_length,
        "output_format": args.output_format,
        "out": args.out,
        "seed": getattr(args, "seed", None),
        "witnesses": getattr(args, "witnesses", True),
    }
    if args.max_arity is not None:
        values["max_arity"] = args.max_arity
    if args.eq_window is not None:
        values["eq_window"] = args.eq_window
    return RunConfig.model_validate(values)


def _emit(report: Report, output_format: str, out: Optional[Path]) -> None:
    text = report.render(output_format)
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _fail(command: str, error: Exception, output_format: str, out: Optional[Path]) -> None:
    report = Report(command=command, error=ErrorView.of(error))
    if output_format == "structured":
        _emit(report, output_format, out)
    else:
        sys.stderr.write(report.to_text())


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as e:
        sys.stderr.write(f"{e}\n")
        return EXIT_USAGE
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        cfg = config_from_args(args)
    except ValidationError as e:
        _fail(args.command, e, args.output_format, args.out)
        return EXIT_USAGE

    try:
        if args.command == "classify":
            report, code = cmd_classify(cfg)
        elif args.command == "check":
            report, code = cmd_check(cfg, args.block)
        elif args.command == "count":
            report, code = cmd_count(cfg)
        else:
            report, code = cmd_enumerate(cfg, args.violating)
    except InvariantBreach as e:
        _fail(args.command, e, cfg.output_format, cfg.out)
        return EXIT_INTERNAL
    except CexClassError as e:
        _fail(args.command, e, cfg.output_format, cfg.out)
        return EXIT_USAGE

    _emit(report, cfg.output_format, cfg.out)
    log(logger, "CLI", "info", args.command, f"exit {code}")
    return code


if __name__ == "__main__":
    sys.exit(main())
