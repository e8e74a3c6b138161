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
"""Parser for the model language (.ccm), predicate libraries (.ccp) and
trace constraints in their canonical text form.

The surface is block-structured: `type`, `record`, `vars`, `init`, `trans`,
`invariant Name:` and `pred name[params] { body }` sections, in any order as
long as names are declared before use. Record variables are flattened into
one state variable per field (`msg.sender`). Unicode and ASCII operator
spellings are both accepted.

Syntax lives in `model.lark`; this module walks the parse tree, resolves
names, typechecks and builds kernel expressions.
"""

import logging
import re
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Union

import yaml
from lark import Lark, Token as LarkToken, Tree
from lark.exceptions import UnexpectedCharacters, UnexpectedInput, UnexpectedToken
from lark.visitors import Interpreter

from .constants import BUILTIN_ALIASES
from .errors import ConfigError, ParseError, log
from .factgen import BUILTINS, TRUE_PRED, AtomicFact, ConstArg, ParamSpec, PosArg, PredicateDef, RecordType, Schema, VarAt, typecheck
from .kernel import (
    TRUE_EXPR,
    BinOp,
    Const,
    Domain,
    Expr,
    Ite,
    Not,
    Param,
    PosVar,
    Property,
    SetLit,
    SymbolicTransitionSystem,
    Var,
    VarDecl,
    conjoin,
)
from .tracecon import TraceConstraint

logger = logging.getLogger(__name__)

# --- Grammar ---

FRONTMATTER_PATTERN = re.compile(
    r'\A\s*---\s*\n(?P<frontmatter>.*?)\n\s*---\s*\n(?P<content>.*)', re.DOTALL
)

GRAMMAR = Lark.open_from_package(
    "cexclass",
    "model.lark",
    start=["model", "library", "predicate", "constraint"],
    parser="lalr",
    lexer="basic",
    propagate_positions=True,
)

OPERATOR_ALIASES = {
    "∧": "and", "/\\": "and", "&&": "and",
    "∨": "or", "\\/": "or", "||": "or",
    "=>": "implies", "->": "implies", "⇒": "implies",
    "!": "not", "¬": "not",
    "==": "=", "≠": "!=", "/=": "!=",
    "≤": "<=", "≥": ">=",
    "∈": "in", "∉": "notin", "∪": "union",
    "−": "-", "′": "'",
    "⊤": "true", "⊥": "false",
}

KEYWORDS = frozenset({
    "model", "type", "record", "vars", "var", "init", "trans", "invariant", "pred",
    "if", "then", "else", "and", "or", "not", "implies", "in", "notin", "union",
    "true", "false", "set", "of", "int", "bool", "pos", "exists",
})

Node = Union[Tree, LarkToken]


# --- Tokens ---

@dataclass(frozen=True)
class Token:
    """A lexeme; `value` is the canonical spelling, `text` what the source had."""
    kind: str  # name, keyword, num, op, eof
    value: str
    text: str
    line: int
    column: int


def _canonical(tok: LarkToken) -> str:
    if tok.type == "NOTIN":
        return "notin"
    return OPERATOR_ALIASES.get(str(tok), str(tok))


def _end_of(text: str) -> tuple[int, int]:
    return text.count("\n") + 1, len(text) - text.rfind("\n")


def tokenize(source: str, line_offset: int = 0) -> list[Token]:
    """Split source into tokens, dropping whitespace and `--` comments."""
    text = "\n" * line_offset + source
    tokens: list[Token] = []
    try:
        for tok in GRAMMAR.lex(text):
            value = _canonical(tok)
            if tok.type in ("NAME", "NUM"):
                kind = tok.type.lower()
            else:
                kind = "keyword" if value in KEYWORDS else "op"
            tokens.append(Token(kind, value, str(tok), tok.line, tok.column))
    except UnexpectedInput as e:
        raise _syntax_error(e, text) from e
    tokens.append(Token("eof", "", "", *_end_of(text)))
    return tokens


def _spell(terminal: str) -> str:
    if terminal == "$END":
        return "end of input"
    try:
        pattern = GRAMMAR.get_terminal(terminal).pattern
    except KeyError:
        return terminal.lower()
    return repr(pattern.value) if pattern.type == "str" else terminal.lower()


def _syntax_error(error: UnexpectedInput, text: str) -> ParseError:
    if isinstance(error, UnexpectedCharacters):
        return ParseError(f"unexpected character {error.char!r}", error.line, error.column, error.char)
    if isinstance(error, UnexpectedToken):
        expected = sorted({_spell(t) for t in error.expected})
        listing = ", ".join(expected[:8]) + (", ..." if len(expected) > 8 else "")
        if error.token.type == "$END":
            return ParseError(f"unexpected end of input, expected {listing}", *_end_of(text))
        return ParseError(f"expected {listing}", error.line, error.column, str(error.token))
    return ParseError(str(error), getattr(error, "line", 1), getattr(error, "column", 1))


def _parse(text: str, start: str) -> Tree:
    try:
        return GRAMMAR.parse(text, start=start)
    except UnexpectedInput as e:
        raise _syntax_error(e, text) from e


# --- Frontmatter ---

def parse_frontmatter(content: str) -> tuple[dict[str, Any], str]:
    """Split YAML frontmatter from the start of a corpus file.

    Returns:
        (metadata, remaining source). Sources without frontmatter yield an
        empty mapping and the unchanged text.

    Raises:
        ParseError: if the block is not valid YAML or not a mapping
    """
    if not content.strip().startswith('---'):
        return {}, content
    match = FRONTMATTER_PATTERN.match(content)
    if not match:
        if content.strip() == '---':
            return {}, ''
        log(logger, "Parser", "debug", "frontmatter", "No frontmatter block found despite '---' prefix")
        return {}, content

    frontmatter_text = match.group('frontmatter')
    remaining = match.group('content')
    if not frontmatter_text.strip():
        return {}, remaining

    try:
        metadata = yaml.safe_load(frontmatter_text)
    except yaml.YAMLError as e:
        raise ParseError(f"invalid frontmatter: {e}") from e
    if metadata is None:
        metadata = {}
    if not isinstance(metadata, dict):
        raise ParseError(f"frontmatter is not a mapping (got {type(metadata).__name__})")
    return metadata, remaining


def _split_frontmatter(source: str) -> tuple[dict[str, Any], str]:
    """Metadata and the body, padded with blank lines so positions match the file."""
    metadata, body = parse_frontmatter(source)
    offset = source[: len(source) - len(body)].count("\n") if body and source.endswith(body) else 0
    return metadata, "\n" * offset + body


# --- Parsed artifacts ---

@dataclass
class ModelFile:
    """A parsed model: the system, its named invariants and predicates."""
    system: SymbolicTransitionSystem
    properties: dict[str, Property] = field(default_factory=dict)
    predicates: dict[str, PredicateDef] = field(default_factory=dict)
    name: str = "model"
    types: dict[str, Domain] = field(default_factory=dict)
    records: dict[str, RecordType] = field(default_factory=dict)
    record_vars: dict[str, RecordType] = field(default_factory=dict)
    var_types: dict[str, str] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def schema(self) -> Schema:
        return Schema(dict(self.system.domains), dict(self.record_vars))

    def get_property(self, name: str) -> Property:
        """Look up an invariant; `true` is always available."""
        if name in self.properties:
            return self.properties[name]
        if name == "true":
            return Property("true", TRUE_EXPR)
        known = ", ".join(self.properties) or "none"
        raise ConfigError(f"unknown property '{name}' (model defines: {known})")

    def signature(self) -> tuple:
        """Structural identity, ignoring source locations and metadata."""
        return (
            self.name,
            self.system.vars,
            self.system.init,
            self.system.trans,
            tuple((n, p.expr) for n, p in self.properties.items()),
            tuple((n, p.params, p.body) for n, p in self.predicates.items()),
            tuple(self.types.items()),
            tuple(self.records.items()),
            tuple(self.var_types.items()),
        )


@dataclass
class Library:
    """A predicate library: built-in selections plus typed predicates."""
    name: str
    description: str = ""
    builtins: tuple[str, ...] = ()
    predicates: dict[str, PredicateDef] = field(default_factory=dict)

    def members(self) -> list[PredicateDef]:
        """Predicates in library order: built-ins first."""
        return [BUILTINS[b] for b in self.builtins] + list(self.predicates.values())


# --- Typing ---

@dataclass(frozen=True)
class _Type:
    kind: str  # bool, int, pos, enum, sym, set, record
    domain: Optional[Domain] = None
    record: Optional[RecordType] = None
    members: tuple[str, ...] = ()

    def describe(self) -> str:
        if self.kind == "record" and self.record:
            return self.record.name
        if self.kind == "sym":
            return f"symbol {self.members[0]}"
        if self.domain is not None:
            return str(self.domain)
        return {"set": "set", "int": "int", "pos": "position"}.get(self.kind, self.kind)

    def symbols(self) -> tuple[str, ...]:
        if self.domain is not None and self.domain.kind in ("enum", "set"):
            return self.domain.symbols
        return self.members


BOOL = _Type("bool", Domain.boolean())
INT = _Type("int")
POS = _Type("pos")
NUMERIC = ("int", "pos")


def _type_of(domain: Domain) -> _Type:
    return _Type("int" if domain.kind == "int" else domain.kind, domain)


def _compatible(a: _Type, b: _Type) -> bool:
    if a.kind == "record" or b.kind == "record":
        return a.kind == b.kind == "record" and a.record.name == b.record.name
    if a.kind in NUMERIC or b.kind in NUMERIC:
        return a.kind in NUMERIC and b.kind in NUMERIC
    if a.kind == "bool" or b.kind == "bool":
        return a.kind == b.kind
    if a.kind == "set" or b.kind == "set":
        if a.kind != b.kind:
            return False
        if a.domain is not None and b.domain is not None:
            return a.domain == b.domain
        wider, narrower = (a, b) if a.domain is not None else (b, a)
        return wider.domain is None or set(narrower.members) <= set(wider.symbols())
    if a.kind == "enum" and b.kind == "enum":
        return a.domain == b.domain
    if a.kind == "sym" and b.kind == "sym":
        return True
    enum, sym = (a, b) if a.kind == "enum" else (b, a)
    return sym.members[0] in enum.symbols()


@dataclass(frozen=True)
class _RecordRef:
    """A whole record (variable or parameter) before a field is selected."""
    name: str
    record: RecordType
    param: bool = False
    primed: bool = False
    at: Optional[str] = None

    def select(self, name: str) -> Expr:
        if self.param:
            return Param(self.name, name)
        return Var(f"{self.name}.{name}", self.primed, self.at)


Typed = tuple[Union[Expr, _RecordRef], _Type]


def _loc(node: Node) -> tuple[int, int]:
    if isinstance(node, LarkToken):
        return node.line, node.column
    return node.meta.line, node.meta.column


def _op(node: Tree) -> LarkToken:
    """The operator token of a `!`-rule such as `and_op`."""
    return node.children[0]


def _signed(node: Tree) -> int:
    value = int(node.children[-1])
    return -value if len(node.children) == 2 else value


def _symbols(node: Tree) -> list[str]:
    return [str(tok) for tok in node.children]


# --- Tree walking ---

class _Walker:
    """Shared location handling for the model and constraint builders."""

    def __init__(self, text: str):
        self.text = text

    def error(self, message: str, node: Optional[Node] = None) -> ParseError:
        if node is None or (isinstance(node, Tree) and node.meta.empty):
            return ParseError(message, *_end_of(self.text))
        if isinstance(node, LarkToken):
            return ParseError(message, node.line, node.column, str(node))
        span = self.text[node.meta.start_pos:node.meta.end_pos].split()
        return ParseError(message, node.meta.line, node.meta.column, span[0] if span else "")


class _Builder(_Walker, Interpreter):
    """Typechecks a model, predicate or library tree into kernel objects.

    Expression rules are visited by name; each returns the expression
    together with its type. Record comparisons are expanded field by field.
    """

    def __init__(self, text: str, context: Optional[ModelFile] = None):
        super().__init__(text)
        self.types: dict[str, Domain] = {}
        self.records: dict[str, RecordType] = {}
        self.domains: dict[str, Domain] = {}
        self.record_vars: dict[str, RecordType] = {}
        self.var_types: dict[str, str] = {}
        self.symbols: set[str] = set()
        self.params: dict[str, ParamSpec] = {}
        self.mode = "init"
        if context is not None:
            self.types = dict(context.types)
            self.records = dict(context.records)
            self.domains = dict(context.system.domains)
            self.record_vars = dict(context.record_vars)
            self.var_types = dict(context.var_types)
            for domain in [*self.types.values(), *self.domains.values()]:
                self._add_symbols(domain)

    def _add_symbols(self, domain: Domain) -> None:
        if domain.kind in ("enum", "set"):
            self.symbols.update(domain.symbols)

    def _domain(self, factory, node: Node) -> Domain:
        try:
            domain = factory()
        except ValueError as e:
            raise self.error(str(e), node) from e
        self._add_symbols(domain)
        return domain

    # --- Sections ---

    def model(self, tree: Tree) -> ModelFile:
        if not tree.children:
            raise self.error("empty model")
        first = tree.children[0]
        name = "model"
        init: list[Expr] = []
        trans: list[Expr] = []
        properties: dict[str, Property] = {}
        predicates: dict[str, PredicateDef] = {}
        for section in tree.children:
            kind = section.data
            if kind == "model_name":
                name = str(section.children[0])
            elif kind == "type_decl":
                self._type_decl(section)
            elif kind == "record_decl":
                self._record_decl(section)
            elif kind == "vars_decl":
                for decl in section.children:
                    self._var_decl(decl)
            elif kind == "init_section":
                init.append(self._body(section.children[0], "init"))
            elif kind == "trans_section":
                trans.append(self._body(section.children[0], "trans"))
            elif kind == "invariant":
                name_tok, body = section.children
                if str(name_tok) in properties:
                    raise self.error(f"duplicate invariant '{name_tok}'", name_tok)
                properties[str(name_tok)] = Property(str(name_tok), self._body(body, "invariant"))
            else:
                pred = self.pred_decl(section, predicates)
                predicates[pred.name] = pred
        if not self.domains:
            raise self.error("model declares no variables", first)

        decls = tuple(VarDecl(n, d) for n, d in self.domains.items())
        try:
            system = SymbolicTransitionSystem(decls, conjoin(*init), conjoin(*trans))
        except ValueError as e:
            raise self.error(str(e), first) from e
        return ModelFile(
            system=system,
            properties=properties,
            predicates=predicates,
            name=name,
            types=self.types,
            records=self.records,
            record_vars=self.record_vars,
            var_types=self.var_types,
        )

    def _type_decl(self, tree: Tree) -> None:
        name_tok, symbol_list = tree.children
        name = str(name_tok)
        if name in self.types or name in self.records:
            raise self.error(f"duplicate type '{name}'", name_tok)
        symbols = _symbols(symbol_list)
        self.types[name] = self._domain(lambda: Domain.enum(symbols, name=name), symbol_list)

    def _record_decl(self, tree: Tree) -> None:
        name_tok, *field_nodes = tree.children
        name = str(name_tok)
        if name in self.types or name in self.records:
            raise self.error(f"duplicate type '{name}'", name_tok)
        fields: list[tuple[str, Domain]] = []
        for node in field_nodes:
            field_name, type_node = node.children
            field_tok = _op(field_name)
            if any(n == str(field_tok) for n, _ in fields):
                raise self.error(f"duplicate field '{field_tok}'", field_tok)
            _, domain = self._type_expr(type_node, allow_record=False, allow_param=False)
            fields.append((str(field_tok), domain))
        if not fields:
            raise self.error(f"record '{name}' has no fields", name_tok)
        self.records[name] = RecordType(name, tuple(fields))

    def _type_expr(self, node: Tree, *, allow_record: bool, allow_param: bool) -> tuple[str, Union[Domain, RecordType, None]]:
        """Resolve a type; returns its spelling and domain (None for `pos` and bare `int`)."""
        kind = node.data
        if kind == "bool_type":
            return "bool", Domain.boolean()
        if kind == "pos_type":
            if not allow_param:
                raise self.error("'pos' is only allowed for predicate parameters", node)
            return "pos", None
        if kind == "int_type":
            if not node.children:
                if not allow_param:
                    raise self.error("integer variables need a range, e.g. int[0..3]", node)
                return "int", None
            lo, hi = (_signed(bound) for bound in node.children)
            domain = self._domain(lambda: Domain.integer(lo, hi), node)
            return str(domain), domain
        if kind == "enum_type":
            symbols = _symbols(node.children[0])
            domain = self._domain(lambda: Domain.enum(symbols), node)
            return str(domain), domain
        if kind == "set_type":
            (element,) = node.children
            if isinstance(element, Tree):
                symbols, type_name = _symbols(element), None
            elif str(element) in self.types:
                symbols, type_name = list(self.types[str(element)].symbols), str(element)
            else:
                raise self.error(f"unknown type '{element}'", element)
            domain = self._domain(lambda: Domain.set_of(symbols, name=type_name), element)
            return str(domain), domain
        (type_tok,) = node.children
        name = str(type_tok)
        if name in self.types:
            return name, self.types[name]
        if name in self.records:
            if not allow_record:
                raise self.error(f"record type '{name}' cannot be nested", type_tok)
            return name, self.records[name]
        raise self.error(f"unknown type '{name}'", type_tok)

    def _var_decl(self, tree: Tree) -> None:
        name_tok, type_node = tree.children
        spelling, kind = self._type_expr(type_node, allow_record=True, allow_param=False)
        name = str(name_tok)
        if name in self.var_types or name in self.domains:
            raise self.error(f"duplicate variable '{name}'", name_tok)
        if isinstance(kind, RecordType):
            for field_name, domain in kind.fields:
                self.domains[f"{name}.{field_name}"] = domain
            self.record_vars[name] = kind
        else:
            self.domains[name] = kind
        self.var_types[name] = spelling

    def pred_decl(self, tree: Tree, existing: Mapping[str, PredicateDef]) -> PredicateDef:
        name_tok, *param_nodes, body = tree.children
        name = str(name_tok)
        if name in existing or name in BUILTINS:
            raise self.error(f"duplicate predicate '{name}'", name_tok)
        params: list[ParamSpec] = []
        for node in param_nodes:
            param_tok, type_node = node.children
            if any(p.name == str(param_tok) for p in params):
                raise self.error(f"duplicate parameter '{param_tok}'", param_tok)
            spelling, kind = self._type_expr(type_node, allow_record=True, allow_param=True)
            params.append(_param_spec(str(param_tok), spelling, kind))
        self.params = {p.name: p for p in params}
        try:
            expr = self._body(body, "pred")
        finally:
            self.params = {}
        return PredicateDef(name, tuple(params), expr)

    def _body(self, tree: Tree, mode: str) -> Expr:
        """`;`-separated boolean statements, conjoined."""
        self.mode = mode
        return conjoin(*(self._check(self.expression(node), node, ("bool",), mode) for node in tree.children))

    # --- Expressions ---

    def _check(self, typed: Typed, node: Node, kinds: tuple[str, ...], op: str) -> Expr:
        expr, ty = typed
        if ty.kind not in kinds:
            raise self.error(f"type mismatch: operand of '{op}' is {ty.describe()}", node)
        return expr

    def expression(self, node: Tree) -> Typed:
        return self.visit(node)

    def conditional(self, node: Tree) -> Typed:
        cond_node, then_node, other_node = node.children
        cond = self._check(self.expression(cond_node), cond_node, ("bool",), "if")
        then_expr, then_ty = self.expression(then_node)
        other_expr, other_ty = self.expression(other_node)
        if "record" in (then_ty.kind, other_ty.kind):
            raise self.error("record values cannot be selected by 'if'", node)
        if not _compatible(then_ty, other_ty):
            raise self.error(f"type mismatch: branches of 'if' are {then_ty.describe()} and {other_ty.describe()}", other_node)
        ty = other_ty if then_ty.kind == "sym" else then_ty
        return Ite(cond, then_expr, other_expr, loc=_loc(node)), ty

    def logical(self, node: Tree) -> Typed:
        left_node, op_node, right_node = node.children
        tok = _op(op_node)
        left = self._check(self.expression(left_node), left_node, ("bool",), str(tok))
        right = self._check(self.expression(right_node), right_node, ("bool",), str(tok))
        return BinOp(_canonical(tok), left, right, loc=_loc(tok)), BOOL

    implication = disjunction = conjunction = logical

    def negation(self, node: Tree) -> Typed:
        op_node, operand = node.children
        tok = _op(op_node)
        return Not(self._check(self.expression(operand), operand, ("bool",), str(tok)), loc=_loc(tok)), BOOL

    def compare(self, node: Tree) -> Typed:
        left_node, op_node, right_node, *chained = node.children
        left = self.expression(left_node)
        right = self.expression(right_node)
        if chained:
            raise self.error("comparisons cannot be chained; add parentheses", _op(chained[0]))
        tok = _op(op_node)
        op = _canonical(tok)
        (left_expr, left_ty), (right_expr, right_ty) = left, right
        if op in ("in", "notin"):
            if right_ty.kind != "set":
                raise self.error(f"type mismatch: right operand of '{tok}' must be a set, found {right_ty.describe()}", right_node)
            if left_ty.kind not in ("enum", "sym"):
                raise self.error(f"type mismatch: left operand of '{tok}' must be an enumeration value", left_node)
            known = right_ty.symbols()
            if known and not set(left_ty.symbols()) <= set(known):
                raise self.error(f"type mismatch: {left_ty.describe()} is not an element of {right_ty.describe()}", left_node)
            return BinOp(op, left_expr, right_expr, loc=_loc(tok)), BOOL
        if op in ("=", "!="):
            if not _compatible(left_ty, right_ty):
                raise self.error(f"type mismatch: cannot compare {left_ty.describe()} with {right_ty.describe()}", tok)
            if left_ty.kind == "record":
                return _record_compare(op, left_expr, right_expr, _loc(tok)), BOOL
            return BinOp(op, left_expr, right_expr, loc=_loc(tok)), BOOL
        return BinOp(
            op,
            self._check(left, left_node, NUMERIC, str(tok)),
            self._check(right, right_node, NUMERIC, str(tok)),
            loc=_loc(tok),
        ), BOOL

    def additive(self, node: Tree) -> Typed:
        left_node, op_node, right_node = node.children
        tok = _op(op_node)
        left = self.expression(left_node)
        right = self.expression(right_node)
        if _canonical(tok) == "union":
            left_expr = self._check(left, left_node, ("set",), "union")
            right_expr = self._check(right, right_node, ("set",), "union")
            if not _compatible(left[1], right[1]):
                raise self.error(f"type mismatch: cannot unite {left[1].describe()} with {right[1].describe()}", tok)
            return BinOp("union", left_expr, right_expr, loc=_loc(tok)), _union_type(left[1], right[1])
        return BinOp(
            _canonical(tok),
            self._check(left, left_node, NUMERIC, str(tok)),
            self._check(right, right_node, NUMERIC, str(tok)),
            loc=_loc(tok),
        ), INT

    def number(self, node: Tree) -> Typed:
        return Const(_signed(node), loc=_loc(node)), INT

    def boolean(self, node: Tree) -> Typed:
        return Const(str(node.children[0]) == "true", loc=_loc(node)), BOOL

    def set_literal(self, node: Tree) -> Typed:
        items: list[Expr] = []
        members: list[str] = []
        for child in node.children:
            expr, ty = self.expression(child)
            if ty.kind not in ("enum", "sym"):
                raise self.error("set elements must be enumeration values", child)
            items.append(expr)
            members.extend(ty.symbols())
        return SetLit(tuple(items), loc=_loc(node)), _Type("set", members=tuple(dict.fromkeys(members)))

    def reference(self, node: Tree) -> Typed:
        name_tok, *rest = node.children
        name = str(name_tok)
        field_tok: Optional[LarkToken] = None
        at_tok: Optional[LarkToken] = None
        primes: list[LarkToken] = []
        for child in rest:
            if isinstance(child, LarkToken):
                at_tok = child
            elif child.data == "prime":
                primes.append(_op(child))
            else:
                field_tok = _op(child)
        if name in self.params:
            if primes or at_tok is not None:
                raise self.error(f"parameter '{name}' cannot be primed or indexed", (primes or [at_tok])[0])
            return self._param_reference(name_tok, field_tok, self.params[name])
        if name in self.domains or name in self.record_vars:
            return self._var_reference(name_tok, field_tok, primes, at_tok)
        if name in self.symbols:
            if rest:
                raise self.error(f"'{name}' is a value, not a variable", name_tok)
            return Const(name, loc=_loc(name_tok)), _Type("sym", members=(name,))
        raise self.error(f"unknown variable '{name}'", name_tok)

    def _param_reference(self, tok: LarkToken, field_tok: Optional[LarkToken], spec: ParamSpec) -> Typed:
        name = str(tok)
        if spec.kind == "record":
            if field_tok is not None:
                domain = dict(spec.record.fields).get(str(field_tok))
                if domain is None:
                    raise self.error(f"record {spec.record.name} has no field '{field_tok}'", field_tok)
                return Param(name, str(field_tok), loc=_loc(tok)), _type_of(domain)
            return _RecordRef(name, spec.record, param=True), _Type("record", record=spec.record)
        if field_tok is not None:
            raise self.error(f"parameter '{name}' is not a record", field_tok)
        if spec.kind == "pos":
            return PosVar(name, loc=_loc(tok)), POS
        return Param(name, loc=_loc(tok)), _type_of(spec.domain) if spec.domain is not None else INT

    def _var_reference(
        self,
        tok: LarkToken,
        field_tok: Optional[LarkToken],
        primes: list[LarkToken],
        at_tok: Optional[LarkToken],
    ) -> Typed:
        name = full = str(tok)
        record = self.record_vars.get(name)
        if field_tok is not None:
            if record is None:
                raise self.error(f"'{name}' is not a record variable", field_tok)
            if str(field_tok) not in record.field_names():
                raise self.error(f"record {record.name} has no field '{field_tok}'", field_tok)
            full = f"{name}.{field_tok}"
        if len(primes) > 1:
            raise self.error(f"'{full}' is primed twice", primes[1])
        primed = bool(primes)
        at = None
        if at_tok is not None:
            spec = self.params.get(str(at_tok))
            if spec is None or spec.kind != "pos":
                raise self.error(f"'{at_tok}' is not a position parameter", at_tok)
            at = str(at_tok)
        if primed and self.mode != "trans":
            raise self.error(f"primed variable '{full}' is only allowed in trans", tok)
        if self.mode == "pred" and at is None:
            raise self.error(f"state variable '{full}' needs a position inside a predicate ({full}@t)", tok)
        if full == name and record is not None:
            return _RecordRef(name, record, primed=primed, at=at), _Type("record", record=record)
        return Var(full, primed, at, loc=_loc(tok)), _type_of(self.domains[full])


def _param_spec(name: str, spelling: str, kind: Union[Domain, RecordType, None]) -> ParamSpec:
    if spelling == "pos":
        return ParamSpec(name, "pos", "pos")
    if isinstance(kind, RecordType):
        return ParamSpec(name, "record", kind.name, record=kind)
    return ParamSpec(name, "value", spelling, domain=kind)


def _record_compare(op: str, left: _RecordRef, right: _RecordRef, loc: tuple[int, int]) -> Expr:
    """Fieldwise expansion: `=` is a conjunction, `!=` a disjunction."""
    joiner = "and" if op == "=" else "or"
    parts = [BinOp(op, left.select(f), right.select(f), loc=loc) for f in left.record.field_names()]
    result = parts[0]
    for part in parts[1:]:
        result = BinOp(joiner, result, part, loc=loc)
    return result


def _union_type(a: _Type, b: _Type) -> _Type:
    if a.domain is not None:
        return a
    if b.domain is not None:
        return b
    return _Type("set", members=tuple(dict.fromkeys(a.members + b.members)))


# --- Trace constraints ---

class _ConstraintBuilder(_Walker):
    """Turns `exists i1,i2 : fact /\\ fact` back into a TraceConstraint."""

    def __init__(self, text: str, predicates: Mapping[str, PredicateDef], schema: Schema):
        super().__init__(text)
        self.predicates = predicates
        self.schema = schema
        self.positions: dict[str, int] = {}

    def read(self, tree: Tree) -> TraceConstraint:
        facts = []
        for child in tree.children:
            if isinstance(child, LarkToken):
                if str(child) in self.positions:
                    raise self.error(f"duplicate position variable '{child}'", child)
                self.positions[str(child)] = len(self.positions)
            elif child.data != "and_op":
                facts.append(self._fact(child))
        if not self.positions and facts == [AtomicFact(TRUE_PRED, ())]:
            return TraceConstraint(0)
        return TraceConstraint(len(self.positions), tuple(facts))

    def _fact(self, node: Tree) -> AtomicFact:
        if node.data == "true_fact":
            return AtomicFact(TRUE_PRED, ())
        if node.data == "pred_fact":
            name_tok, *arg_nodes = node.children
            pred = self.predicates.get(str(name_tok))
            if pred is None or pred.builtin:
                raise self.error(f"unknown predicate '{name_tok}'", name_tok)
            args = [self._argument(a) for a in arg_nodes]
        else:
            left_node, op_node, right_node = node.children
            args = [self._argument(left_node), self._argument(right_node)]
            pred = BUILTINS[_canonical(_op(op_node))]
        if not typecheck(pred, args, self.schema):
            raise self.error(f"type mismatch in '{pred.name}' fact", node)
        return AtomicFact(pred, tuple(args))

    def _argument(self, node: Tree) -> Union[VarAt, PosArg, ConstArg]:
        kind = node.data
        if kind == "int_arg":
            return ConstArg(_signed(node.children[0]))
        if kind == "bool_arg":
            return ConstArg(str(node.children[0]) == "true")
        if kind == "set_arg":
            return ConstArg(frozenset(_symbols(node.children[0])))
        if kind == "name_arg":
            (tok,) = node.children
            if str(tok) in self.positions:
                return PosArg(self.positions[str(tok)])
            return ConstArg(str(tok))
        name_tok, *fields, pos_tok = node.children
        var = ".".join([str(name_tok), *(str(_op(f)) for f in fields)])
        if var not in self.schema.domains and var not in self.schema.records:
            raise self.error(f"unknown variable '{var}'", name_tok)
        if str(pos_tok) not in self.positions:
            raise self.error(f"undeclared position variable '{pos_tok}'", pos_tok)
        return VarAt(var, self.positions[str(pos_tok)])


# --- Public API ---

def parse_model(source: str) -> ModelFile:
    """Parse and typecheck a model file.

    Raises:
        ParseError: the first syntax error, or else the first typing error
            in document order
    """
    metadata, text = _split_frontmatter(source)
    model = _Builder(text).model(_parse(text, "model"))
    model.metadata = metadata
    log(logger, "Parser", "debug", "parse_model", f"{model.name}: {len(model.system.vars)} state variables, {len(model.predicates)} predicates")
    return model


def parse_predicate(source: str, context: ModelFile) -> PredicateDef:
    """Parse one `pred name[params] { body }` definition against a model."""
    tree = _parse(source, "predicate")
    return _Builder(source, context).pred_decl(tree.children[0], {})


def parse_library(source: str, context: ModelFile) -> Library:
    """Parse a predicate library (.ccp); frontmatter names its built-ins."""
    metadata, text = _split_frontmatter(source)
    builder = _Builder(text, context)
    predicates: dict[str, PredicateDef] = {}
    for node in _parse(text, "library").children:
        pred = builder.pred_decl(node, predicates)
        predicates[pred.name] = pred

    builtins = []
    for spelling in metadata.get("builtins") or []:
        name = BUILTIN_ALIASES.get(str(spelling))
        if name is None:
            raise ParseError(f"unknown built-in predicate '{spelling}' in frontmatter")
        builtins.append(name)
    return Library(
        name=str(metadata.get("name", "library")),
        description=str(metadata.get("description", "")),
        builtins=tuple(builtins),
        predicates=predicates,
    )


def parse_constraint(text: str, predicates: Mapping[str, PredicateDef], schema: Schema, line: int = 1) -> TraceConstraint:
    """Parse the canonical rendering of a trace constraint."""
    padded = "\n" * (line - 1) + text
    return _ConstraintBuilder(padded, predicates, schema).read(_parse(padded, "constraint"))


def parse_constraints(text: str, predicates: Mapping[str, PredicateDef], schema: Schema) -> tuple[TraceConstraint, ...]:
    """One constraint per non-blank line; `--` starts a comment."""
    constraints = []
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped and not stripped.startswith("--"):
            constraints.append(parse_constraint(line, predicates, schema, number))
    return tuple(constraints)


# --- Printing ---

_PRECEDENCE = {"implies": 1, "or": 2, "and": 3, "union": 6, "+": 6, "-": 6}
_SPELLING = {"notin": "not in"}


def _precedence(expr: Expr) -> int:
    if isinstance(expr, Ite):
        return 0
    if isinstance(expr, Not):
        return 4
    if isinstance(expr, BinOp):
        return _PRECEDENCE.get(expr.op, 5)
    return 7


def format_expr(expr: Expr, context: int = 0) -> str:
    """Print an expression with the parentheses its parse needs, no more."""
    text = _format(expr)
    return f"({text})" if _precedence(expr) < context else text


def _format(expr: Expr) -> str:
    if isinstance(expr, Const):
        if isinstance(expr.value, bool):
            return "true" if expr.value else "false"
        if isinstance(expr.value, frozenset):
            return "{" + ", ".join(sorted(expr.value)) + "}"
        return str(expr.value)
    if isinstance(expr, Var):
        text = expr.name + ("'" if expr.primed else "")
        return f"{text}@{expr.at}" if expr.at else text
    if isinstance(expr, Param):
        return f"{expr.name}.{expr.field}" if expr.field else expr.name
    if isinstance(expr, PosVar):
        return expr.name
    if isinstance(expr, SetLit):
        return "{" + ", ".join(format_expr(i) for i in expr.items) + "}"
    if isinstance(expr, Not):
        return "not " + format_expr(expr.operand, 4)
    if isinstance(expr, Ite):
        return f"if {format_expr(expr.cond)} then {format_expr(expr.then)} else {format_expr(expr.other)}"
    if isinstance(expr, BinOp):
        own = _precedence(expr)
        if expr.op == "implies":
            left, right = own + 1, own
        elif own == 5:
            left, right = 6, 6
        else:
            left, right = own, own + 1
        op = _SPELLING.get(expr.op, expr.op)
        return f"{format_expr(expr.left, left)} {op} {format_expr(expr.right, right)}"
    raise TypeError(f"cannot format {type(expr).__name__}")


def _statements(expr: Expr) -> list[Expr]:
    if isinstance(expr, BinOp) and expr.op == "and":
        return _statements(expr.left) + [expr.right]
    return [expr]


def _format_body(expr: Expr, indent: str = "  ") -> str:
    statements = _statements(expr)
    if len(statements) > 1 and TRUE_EXPR in statements:
        statements = [expr]
    return ";\n".join(indent + format_expr(s) for s in statements)


def format_model(model: ModelFile) -> str:
    """Pretty-print a model; the output parses back to the same structure."""
    out = [f"model {model.name}", ""]
    for name, domain in model.types.items():
        out.append(f"type {name} = {{{', '.join(domain.symbols)}}}")
    for record in model.records.values():
        fields = ", ".join(f"{n}: {d}" for n, d in record.fields)
        out.append(f"record {record.name} {{ {fields} }}")
    if model.types or model.records:
        out.append("")
    out.append("vars")
    out.extend(f"  {name}: {spelling}" for name, spelling in model.var_types.items())
    out.append("")
    for section, expr in (("init", model.system.init), ("trans", model.system.trans)):
        out.extend([section, _format_body(expr), ""])
    for prop in model.properties.values():
        out.extend([f"invariant {prop.name}:", _format_body(prop.expr), ""])
    for pred in model.predicates.values():
        params = ", ".join(f"{p.name}: {p.type_name}" for p in pred.params)
        out.extend([f"pred {pred.name}[{params}] {{", _format_body(pred.body), "}", ""])
    return "\n".join(out)


__all__ = [
    "FRONTMATTER_PATTERN",
    "GRAMMAR",
    "Library",
    "ModelFile",
    "Token",
    "format_expr",
    "format_model",
    "parse_constraint",
    "parse_constraints",
    "parse_frontmatter",
    "parse_library",
    "parse_model",
    "parse_predicate",
    "tokenize",
]
