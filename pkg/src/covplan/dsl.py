"""Parsing and serialization of the template and class-sidecar formats.

Template files (``.pict``) are a strict subset of PICT model syntax:

* one ``Name: v1, v2, ...`` declaration per parameter, where a value is an
  integer, a symbol token, or a ``lo..hi`` integer range;
* constraint statements terminated by ``;`` using ``[Name]`` references,
  ``=, <>, <, <=, >, >=`` comparisons, ``AND``/``OR``/``NOT`` and
  ``IF ... THEN ... [ELSE ...]``;
* ``#`` comment lines, plus the ``# suppress-cross: A B`` pragma which marks
  a parameter pair whose cross is left out of emitted coverage models.

Class sidecar files (``.eqcls``) hold one ``class <Param> <label> { ... }``
line per equivalence class; the classes of a parameter must partition its
whole domain.

PICT features outside the subset (sub-models, weights, aliasing, negative
value markers) are rejected with a diagnostic.  The parser is reentrant and
keeps no shared mutable state.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import CovplanError, ModelError
from .model import (
    And,
    CompareParams,
    CompareValue,
    EquivalenceClassSpec,
    Expr,
    IfThen,
    Not,
    Or,
    Parameter,
    ParameterModel,
    Value,
    EXPLICIT_LIST,
    INTEGER_RANGE,
    ORDERING_OPS,
    serialize_classes,
    serialize_template,
)

__all__ = [
    "SourceSpan",
    "ParseDiagnostic",
    "ParseError",
    "parse_template",
    "parse_classes",
    "serialize_template",
    "serialize_classes",
]


@dataclass(frozen=True, order=True)
class SourceSpan:
    file: str
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: str  # "error" | "warning"
    span: SourceSpan
    message: str

    def __str__(self) -> str:
        return f"{self.span}: {self.severity}: {self.message}"


class ParseError(CovplanError):
    """Raised when a document contains at least one error-level diagnostic."""

    def __init__(self, diagnostics: list[ParseDiagnostic]):
        self.diagnostics = sorted(
            diagnostics, key=lambda d: (d.span.line, d.span.column)
        )
        super().__init__("\n".join(str(d) for d in self.diagnostics))


_IDENT_RE = re.compile(r"[A-Za-z_]\w*\Z")
_INT_RE = re.compile(r"[+-]?\d+\Z")
_RANGE_RE = re.compile(r"([+-]?\d+)\.\.([+-]?\d+)\Z")
_DECL_RE = re.compile(r"\s*([A-Za-z_]\w*)\s*:(.*)\Z")
_SUPPRESS_RE = re.compile(r"#\s*suppress-cross:\s*([A-Za-z_]\w*)\s+([A-Za-z_]\w*)\s*\Z")
_CLASS_RE = re.compile(
    r"class\s+([A-Za-z_]\w*)\s+([A-Za-z_]\w*)\s*\{([^}]*)\}\s*\Z"
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<param>\[[A-Za-z_]\w*\])
  | (?P<string>"[^"\n]*")
  | (?P<kw>\b(?:IF|THEN|ELSE|AND|OR|NOT)\b)
  | (?P<int>[+-]?\d+)
  | (?P<op><>|<=|>=|=|<|>)
  | (?P<punct>[();])
  | (?P<ident>[A-Za-z_]\w*)
  | (?P<bad>.)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    span: SourceSpan


class _Diagnostics:
    def __init__(self) -> None:
        self.items: list[ParseDiagnostic] = []

    def error(self, span: SourceSpan, message: str) -> None:
        self.items.append(ParseDiagnostic("error", span, message))

    def warning(self, span: SourceSpan, message: str) -> None:
        self.items.append(ParseDiagnostic("warning", span, message))

    def raise_if_errors(self) -> None:
        if any(d.severity == "error" for d in self.items):
            raise ParseError(self.items)


def _split_lines(text: str) -> list[str]:
    return text.replace("\r\n", "\n").replace("\r", "\n").split("\n")


def _parse_value_token(token: str) -> Value | tuple[int, int] | None:
    """An int, a symbol string, a (lo, hi) range tuple, or None if malformed."""
    if _INT_RE.match(token):
        return int(token)
    m = _RANGE_RE.match(token)
    if m:
        return (int(m.group(1)), int(m.group(2)))
    if _IDENT_RE.match(token):
        return token
    return None


def _reject_reason(token: str) -> str | None:
    if token.startswith("~"):
        return "negative-value markers ('~') are not supported"
    if "|" in token:
        return "value aliasing ('|') is not supported"
    if "(" in token or ")" in token:
        return "value weights ('(n)') are not supported"
    if token.startswith("<") and token.endswith(">"):
        return "named value references are not supported"
    return None


# ---------------------------------------------------------------------------
# Template parsing
# ---------------------------------------------------------------------------


def _tokenize_constraints(
    pieces: list[tuple[int, str]], source: str, diags: _Diagnostics
) -> list[_Token]:
    tokens: list[_Token] = []
    for lineno, line in pieces:
        for m in _TOKEN_RE.finditer(line):
            kind = m.lastgroup or "bad"
            if kind == "ws":
                continue
            span = SourceSpan(source, lineno, m.start() + 1)
            text = m.group()
            if kind == "bad":
                diags.error(span, f"unexpected character {text!r} in constraint")
                continue
            if kind == "ident":
                diags.error(
                    span,
                    f"unexpected token {text!r}; symbol literals must be quoted "
                    'and parameter references written as [Name]',
                )
                continue
            tokens.append(_Token(kind, text, span))
    return tokens


class _ConstraintParser:
    """Recursive-descent parser over a single ';'-terminated statement."""

    def __init__(self, tokens: list[_Token], diags: _Diagnostics, end_span: SourceSpan):
        self.tokens = tokens
        self.pos = 0
        self.diags = diags
        self.end_span = end_span

    def _peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _next(self) -> _Token | None:
        tok = self._peek()
        if tok is not None:
            self.pos += 1
        return tok

    def _expect_kw(self, word: str) -> bool:
        tok = self._peek()
        if tok is not None and tok.kind == "kw" and tok.text == word:
            self.pos += 1
            return True
        span = tok.span if tok is not None else self.end_span
        self.diags.error(span, f"expected {word}")
        return False

    def _fail(self, message: str) -> None:
        tok = self._peek()
        span = tok.span if tok is not None else self.end_span
        self.diags.error(span, message)
        raise _Abort()

    def parse_statement(self) -> Expr:
        tok = self._peek()
        if tok is not None and tok.kind == "kw" and tok.text == "IF":
            self.pos += 1
            cond = self.parse_expr()
            if not self._expect_kw("THEN"):
                raise _Abort()
            then = self.parse_expr()
            orelse = None
            nxt = self._peek()
            if nxt is not None and nxt.kind == "kw" and nxt.text == "ELSE":
                self.pos += 1
                orelse = self.parse_expr()
            expr: Expr = IfThen(cond, then, orelse)
        else:
            expr = self.parse_expr()
        if self._peek() is not None:
            self._fail("unexpected trailing tokens in constraint")
        return expr

    def parse_expr(self) -> Expr:
        terms = [self.parse_and()]
        while True:
            tok = self._peek()
            if tok is None or tok.kind != "kw" or tok.text != "OR":
                break
            self.pos += 1
            terms.append(self.parse_and())
        return terms[0] if len(terms) == 1 else Or(tuple(terms))

    def parse_and(self) -> Expr:
        terms = [self.parse_unary()]
        while True:
            tok = self._peek()
            if tok is None or tok.kind != "kw" or tok.text != "AND":
                break
            self.pos += 1
            terms.append(self.parse_unary())
        return terms[0] if len(terms) == 1 else And(tuple(terms))

    def parse_unary(self) -> Expr:
        tok = self._peek()
        if tok is not None and tok.kind == "kw" and tok.text == "NOT":
            self.pos += 1
            return Not(self.parse_unary())
        return self.parse_primary()

    def parse_primary(self) -> Expr:
        tok = self._peek()
        if tok is None:
            self._fail("constraint ended unexpectedly")
        if tok.kind == "punct" and tok.text == "(":
            self.pos += 1
            inner = self.parse_expr()
            closing = self._peek()
            if closing is None or closing.text != ")":
                self._fail("expected ')'")
            self.pos += 1
            return inner
        if tok.kind == "kw" and tok.text == "IF":
            self._fail("IF/THEN may only appear at the top level of a constraint")
        return self.parse_comparison()

    def parse_comparison(self) -> Expr:
        tok = self._next()
        if tok is None or tok.kind != "param":
            span = tok.span if tok is not None else self.end_span
            self.diags.error(span, "expected a [Name] parameter reference")
            raise _Abort()
        left_name, left_span = tok.text[1:-1], tok.span
        op_tok = self._next()
        if op_tok is None or op_tok.kind != "op":
            span = op_tok.span if op_tok is not None else self.end_span
            self.diags.error(span, "expected a comparison operator")
            raise _Abort()
        rhs = self._next()
        if rhs is None:
            self.diags.error(self.end_span, "expected a value or [Name] after operator")
            raise _Abort()
        if rhs.kind == "param":
            return CompareParams(left_name, op_tok.text, rhs.text[1:-1])
        if rhs.kind == "int":
            return CompareValue(left_name, op_tok.text, int(rhs.text))
        if rhs.kind == "string":
            return CompareValue(left_name, op_tok.text, rhs.text[1:-1])
        self.diags.error(rhs.span, "expected a value or [Name] after operator")
        raise _Abort()


class _Abort(Exception):
    """Internal: unwind a statement parse after an error diagnostic."""


def _parse_declaration(
    lineno: int, name: str, rest: str, source: str, diags: _Diagnostics
) -> Parameter | None:
    span = SourceSpan(source, lineno, 1)
    tokens = [t.strip() for t in rest.split(",")]
    if tokens == [""]:
        diags.error(span, f"parameter {name!r} has an empty domain")
        return None
    domain: list[Value] = []
    kinds: set[type] = set()
    range_only = len(tokens) == 1
    ok = True
    for raw in tokens:
        col = rest.index(raw) + len(name) + 2 if raw else 1
        tspan = SourceSpan(source, lineno, col)
        if not raw:
            diags.error(tspan, f"parameter {name!r}: empty value in domain list")
            ok = False
            continue
        reason = _reject_reason(raw)
        if reason is not None:
            diags.error(tspan, f"parameter {name!r}: {reason}")
            ok = False
            continue
        parsed = _parse_value_token(raw)
        if parsed is None:
            diags.error(tspan, f"parameter {name!r}: malformed value {raw!r}")
            ok = False
            continue
        if isinstance(parsed, tuple):
            lo, hi = parsed
            if lo > hi:
                diags.error(
                    tspan, f"parameter {name!r}: malformed range {lo}..{hi} (lo > hi)"
                )
                ok = False
                continue
            domain.extend(range(lo, hi + 1))
            kinds.add(int)
        else:
            domain.append(parsed)
            kinds.add(type(parsed))
            range_only = False
    if not ok:
        return None
    if kinds == {int, str}:
        diags.error(span, f"parameter {name!r} mixes integer and symbolic values")
        return None
    seen: set[Value] = set()
    for v in domain:
        if v in seen:
            diags.error(span, f"parameter {name!r}: duplicate domain value {v!r}")
            return None
        seen.add(v)
    if not domain:
        diags.error(span, f"parameter {name!r} has an empty domain")
        return None
    origin = INTEGER_RANGE if range_only else EXPLICIT_LIST
    return Parameter(name, tuple(domain), origin)


def _check_constraint_semantics(
    expr: Expr, span: SourceSpan, params: dict[str, Parameter], diags: _Diagnostics
) -> bool:
    ok = True
    if isinstance(expr, CompareValue):
        p = params.get(expr.param)
        if p is None:
            diags.error(span, f"constraint references unknown parameter {expr.param!r}")
            return False
        if isinstance(expr.value, int) != p.is_integer:
            diags.error(
                span,
                f"constraint compares {expr.param!r} with a literal of the wrong type",
            )
            ok = False
        elif expr.op in ORDERING_OPS and not p.is_integer:
            diags.error(
                span, f"ordering comparison on symbolic parameter {expr.param!r}"
            )
            ok = False
    elif isinstance(expr, CompareParams):
        for name in (expr.left, expr.right):
            if name not in params:
                diags.error(span, f"constraint references unknown parameter {name!r}")
                ok = False
        if ok and not (params[expr.left].is_integer and params[expr.right].is_integer):
            diags.error(
                span,
                f"comparison between {expr.left!r} and {expr.right!r} requires "
                "integer domains on both sides",
            )
            ok = False
    elif isinstance(expr, (And, Or)):
        for t in expr.terms:
            ok = _check_constraint_semantics(t, span, params, diags) and ok
    elif isinstance(expr, Not):
        ok = _check_constraint_semantics(expr.term, span, params, diags)
    elif isinstance(expr, IfThen):
        ok = _check_constraint_semantics(expr.cond, span, params, diags)
        ok = _check_constraint_semantics(expr.then, span, params, diags) and ok
        if expr.orelse is not None:
            ok = _check_constraint_semantics(expr.orelse, span, params, diags) and ok
    return ok


def parse_template(text: str, source: str = "<template>") -> ParameterModel:
    """Parse a template document into a ParameterModel (classes not attached).

    Raises ParseError carrying all error diagnostics, ordered by position.
    """
    diags = _Diagnostics()
    params: list[Parameter] = []
    by_name: dict[str, Parameter] = {}
    suppressions: list[tuple[str, str]] = []
    suppress_spans: list[SourceSpan] = []
    constraint_pieces: list[tuple[int, str]] = []
    constraints_started = False

    for lineno, line in enumerate(_split_lines(text), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            m = _SUPPRESS_RE.match(stripped)
            if m:
                suppressions.append((m.group(1), m.group(2)))
                suppress_spans.append(SourceSpan(source, lineno, 1))
            continue
        if stripped.startswith("{"):
            diags.error(SourceSpan(source, lineno, 1), "sub-models are not supported")
            continue
        decl = _DECL_RE.match(line) if not constraints_started else None
        if decl and not constraints_started:
            name, rest = decl.group(1), decl.group(2)
            if name in by_name:
                diags.error(
                    SourceSpan(source, lineno, 1), f"duplicate parameter name {name!r}"
                )
                continue
            param = _parse_declaration(lineno, name, rest, source, diags)
            if param is not None:
                params.append(param)
                by_name[name] = param
            continue
        if _DECL_RE.match(line) and constraints_started:
            diags.error(
                SourceSpan(source, lineno, 1),
                "parameter declarations must precede constraints",
            )
            continue
        constraints_started = True
        constraint_pieces.append((lineno, line))

    if not params and not diags.items:
        diags.error(SourceSpan(source, 1, 1), "no parameters declared")
    diags.raise_if_errors()

    tokens = _tokenize_constraints(constraint_pieces, source, diags)
    end_span = (
        tokens[-1].span
        if tokens
        else SourceSpan(source, constraint_pieces[-1][0] if constraint_pieces else 1, 1)
    )
    constraints: list[Expr] = []
    statement: list[_Token] = []
    for tok in tokens:
        if tok.kind == "punct" and tok.text == ";":
            if statement:
                parser = _ConstraintParser(statement, diags, tok.span)
                try:
                    expr = parser.parse_statement()
                except _Abort:
                    expr = None
                if expr is not None and _check_constraint_semantics(
                    expr, statement[0].span, by_name, diags
                ):
                    constraints.append(expr)
            statement = []
        else:
            statement.append(tok)
    if statement:
        diags.error(statement[0].span, "constraint is missing its terminating ';'")

    normalized: list[tuple[str, str]] = []
    order = {p.name: i for i, p in enumerate(params)}
    for (a, b), span in zip(suppressions, suppress_spans):
        for name in (a, b):
            if name not in order:
                diags.error(span, f"suppress-cross names unknown parameter {name!r}")
        if a in order and b in order:
            if a == b:
                diags.error(span, f"suppress-cross pairs {a!r} with itself")
            else:
                pair = (a, b) if order[a] < order[b] else (b, a)
                if pair not in normalized:
                    normalized.append(pair)

    diags.raise_if_errors()
    try:
        return ParameterModel(
            parameters=tuple(params),
            constraints=tuple(constraints),
            cross_suppressions=tuple(normalized),
        )
    except ModelError as exc:  # pragma: no cover - parser checks should precede
        diags.error(SourceSpan(source, 1, 1), str(exc))
        raise ParseError(diags.items) from exc


# ---------------------------------------------------------------------------
# Class sidecar parsing
# ---------------------------------------------------------------------------


def parse_classes(
    text: str, model: ParameterModel, source: str = "<classes>"
) -> ParameterModel:
    """Parse an equivalence-class sidecar and attach the classes to the model.

    Each parameter that appears must be fully partitioned: classes pairwise
    disjoint, union equal to the domain.
    """
    diags = _Diagnostics()
    classes: list[EquivalenceClassSpec] = []
    spans: dict[tuple[str, str], SourceSpan] = {}

    for lineno, line in enumerate(_split_lines(text), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        span = SourceSpan(source, lineno, 1)
        m = _CLASS_RE.match(stripped)
        if not m:
            diags.error(span, "expected 'class <Param> <label> { members }'")
            continue
        pname, label, body = m.group(1), m.group(2), m.group(3)
        try:
            param = model.parameter(pname)
        except ModelError:
            diags.error(span, f"class {label!r} references unknown parameter {pname!r}")
            continue
        members: list[Value] = []
        ok = True
        for raw in (t.strip() for t in body.split(",")):
            if not raw:
                diags.error(span, f"class {label!r} of {pname!r}: empty member")
                ok = False
                continue
            parsed = _parse_value_token(raw)
            if parsed is None:
                diags.error(span, f"class {label!r} of {pname!r}: malformed value {raw!r}")
                ok = False
                continue
            if isinstance(parsed, tuple):
                lo, hi = parsed
                if lo > hi:
                    diags.error(
                        span,
                        f"class {label!r} of {pname!r}: malformed range {lo}..{hi}",
                    )
                    ok = False
                    continue
                members.extend(range(lo, hi + 1))
            else:
                members.append(parsed)
        if not ok:
            continue
        outside = [v for v in members if v not in param.domain]
        if outside:
            diags.error(
                span,
                f"class {label!r} of {pname!r} has members outside the domain: "
                f"{outside}",
            )
            continue
        if any(c.parameter == pname and c.label == label for c in classes):
            diags.error(span, f"duplicate class label {label!r} for {pname!r}")
            continue
        ordered = tuple(sorted(set(members), key=param.domain.index))
        if len(ordered) != len(members):
            diags.error(span, f"class {label!r} of {pname!r} repeats members")
            continue
        classes.append(EquivalenceClassSpec(pname, label, ordered))
        spans[(pname, label)] = span

    # Partition checks with spans before handing off to the model invariants.
    by_param: dict[str, list[EquivalenceClassSpec]] = {}
    for cls in classes:
        by_param.setdefault(cls.parameter, []).append(cls)
    for pname, group in by_param.items():
        domain = model.parameter(pname).domain
        seen: dict[Value, str] = {}
        for cls in group:
            for v in cls.members:
                if v in seen:
                    diags.error(
                        spans[(pname, cls.label)],
                        f"classes {seen[v]!r} and {cls.label!r} of {pname!r} "
                        f"overlap at value {v!r}",
                    )
                else:
                    seen[v] = cls.label
        uncovered = [v for v in domain if v not in seen]
        if uncovered:
            diags.error(
                spans[(pname, group[-1].label)],
                f"classes of {pname!r} do not cover the whole domain "
                f"(completeness rule); uncovered: {uncovered}",
            )

    diags.raise_if_errors()
    try:
        return ParameterModel(
            parameters=model.parameters,
            constraints=model.constraints,
            classes=model.classes + tuple(classes),
            cross_suppressions=model.cross_suppressions,
        )
    except ModelError as exc:  # pragma: no cover - checked above
        diags.error(SourceSpan(source, 1, 1), str(exc))
        raise ParseError(diags.items) from exc
