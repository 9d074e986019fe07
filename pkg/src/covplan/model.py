"""Core domain types: parameters, constraints, configurations, covering arrays.

Everything here is immutable after construction and safe to share across
threads; the operations are pure functions of their arguments.

Values are either plain ints or symbol strings.  A single parameter never
mixes the two kinds; relational constraints (``<``, ``<=``, ...) are only
defined between integer-typed operands.
"""

from __future__ import annotations

import hashlib
import operator
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from functools import lru_cache

from .errors import ModelError

Value = int | str

EXPLICIT_LIST = "explicit-list"
INTEGER_RANGE = "integer-range"

_OPS: dict[str, Callable[[Value, Value], bool]] = {
    "=": operator.eq,
    "<>": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}

ORDERING_OPS = ("<", "<=", ">", ">=")


# ---------------------------------------------------------------------------
# Constraint expression tree
# ---------------------------------------------------------------------------


class Expr:
    """Base class for constraint expression nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class CompareValue(Expr):
    """``[param] op literal`` comparison."""

    param: str
    op: str
    value: Value


@dataclass(frozen=True)
class CompareParams(Expr):
    """``[left] op [right]`` comparison between two parameters."""

    left: str
    op: str
    right: str


@dataclass(frozen=True)
class And(Expr):
    terms: tuple[Expr, ...]


@dataclass(frozen=True)
class Or(Expr):
    terms: tuple[Expr, ...]


@dataclass(frozen=True)
class Not(Expr):
    term: Expr


@dataclass(frozen=True)
class IfThen(Expr):
    """``IF cond THEN then [ELSE orelse]``; without ELSE it is an implication."""

    cond: Expr
    then: Expr
    orelse: Expr | None = None


def evaluate(expr: Expr, cfg: Mapping[str, Value]) -> bool:
    """Evaluate a constraint over a configuration covering all referenced names."""
    if isinstance(expr, CompareValue):
        return _OPS[expr.op](cfg[expr.param], expr.value)
    if isinstance(expr, CompareParams):
        return _OPS[expr.op](cfg[expr.left], cfg[expr.right])
    if isinstance(expr, And):
        return all(evaluate(t, cfg) for t in expr.terms)
    if isinstance(expr, Or):
        return any(evaluate(t, cfg) for t in expr.terms)
    if isinstance(expr, Not):
        return not evaluate(expr.term, cfg)
    if isinstance(expr, IfThen):
        if evaluate(expr.cond, cfg):
            return evaluate(expr.then, cfg)
        return True if expr.orelse is None else evaluate(expr.orelse, cfg)
    raise ModelError(f"unknown expression node {type(expr).__name__}")


def compile_predicate(expr: Expr) -> Callable[[Mapping[str, Value]], bool]:
    """Compile an expression into a closure; semantics identical to evaluate()."""
    if isinstance(expr, CompareValue):
        op, p, v = _OPS[expr.op], expr.param, expr.value
        return lambda cfg: op(cfg[p], v)
    if isinstance(expr, CompareParams):
        op, a, b = _OPS[expr.op], expr.left, expr.right
        return lambda cfg: op(cfg[a], cfg[b])
    if isinstance(expr, And):
        subs = tuple(compile_predicate(t) for t in expr.terms)
        return lambda cfg: all(f(cfg) for f in subs)
    if isinstance(expr, Or):
        subs = tuple(compile_predicate(t) for t in expr.terms)
        return lambda cfg: any(f(cfg) for f in subs)
    if isinstance(expr, Not):
        sub = compile_predicate(expr.term)
        return lambda cfg: not sub(cfg)
    if isinstance(expr, IfThen):
        cond = compile_predicate(expr.cond)
        then = compile_predicate(expr.then)
        if expr.orelse is None:
            return lambda cfg: then(cfg) if cond(cfg) else True
        orelse = compile_predicate(expr.orelse)
        return lambda cfg: then(cfg) if cond(cfg) else orelse(cfg)
    raise ModelError(f"unknown expression node {type(expr).__name__}")


def referenced_parameters(expr: Expr) -> frozenset[str]:
    """Names of all parameters the expression reads."""
    if isinstance(expr, CompareValue):
        return frozenset((expr.param,))
    if isinstance(expr, CompareParams):
        return frozenset((expr.left, expr.right))
    if isinstance(expr, (And, Or)):
        out: frozenset[str] = frozenset()
        for t in expr.terms:
            out |= referenced_parameters(t)
        return out
    if isinstance(expr, Not):
        return referenced_parameters(expr.term)
    if isinstance(expr, IfThen):
        out = referenced_parameters(expr.cond) | referenced_parameters(expr.then)
        if expr.orelse is not None:
            out |= referenced_parameters(expr.orelse)
        return out
    raise ModelError(f"unknown expression node {type(expr).__name__}")


def literal_references(expr: Expr) -> tuple[tuple[str, Value], ...]:
    """All (parameter, literal) pairs compared anywhere in the expression."""
    if isinstance(expr, CompareValue):
        return ((expr.param, expr.value),)
    if isinstance(expr, CompareParams):
        return ()
    if isinstance(expr, (And, Or)):
        out: list[tuple[str, Value]] = []
        for t in expr.terms:
            out.extend(literal_references(t))
        return tuple(out)
    if isinstance(expr, Not):
        return literal_references(expr.term)
    if isinstance(expr, IfThen):
        out = list(literal_references(expr.cond)) + list(literal_references(expr.then))
        if expr.orelse is not None:
            out.extend(literal_references(expr.orelse))
        return tuple(out)
    raise ModelError(f"unknown expression node {type(expr).__name__}")


def _literal_text(value: Value) -> str:
    return str(value) if isinstance(value, int) else f'"{value}"'


def _term_text(expr: Expr, parent: str) -> str:
    text = constraint_to_text(expr)
    if isinstance(expr, (CompareValue, CompareParams)):
        return text
    if isinstance(expr, Not) and parent in ("and", "or", "not"):
        return text
    if isinstance(expr, And) and parent == "or":
        return text
    return f"({text})"


def constraint_to_text(expr: Expr) -> str:
    """Render an expression in template syntax (without the trailing ';')."""
    if isinstance(expr, CompareValue):
        return f"[{expr.param}] {expr.op} {_literal_text(expr.value)}"
    if isinstance(expr, CompareParams):
        return f"[{expr.left}] {expr.op} [{expr.right}]"
    if isinstance(expr, And):
        return " AND ".join(_term_text(t, "and") for t in expr.terms)
    if isinstance(expr, Or):
        return " OR ".join(_term_text(t, "or") for t in expr.terms)
    if isinstance(expr, Not):
        return f"NOT {_term_text(expr.term, 'not')}"
    if isinstance(expr, IfThen):
        text = f"IF {constraint_to_text(expr.cond)} THEN {constraint_to_text(expr.then)}"
        if expr.orelse is not None:
            text += f" ELSE {constraint_to_text(expr.orelse)}"
        return text
    raise ModelError(f"unknown expression node {type(expr).__name__}")


# ---------------------------------------------------------------------------
# Parameters, equivalence classes, the model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Parameter:
    """A named parameter with a finite ordered value domain."""

    name: str
    domain: tuple[Value, ...]
    origin: str = EXPLICIT_LIST

    def __post_init__(self) -> None:
        if not self.name:
            raise ModelError("parameter name must be non-empty")
        if not self.domain:
            raise ModelError(f"parameter {self.name!r} has an empty domain")
        if len(set(self.domain)) != len(self.domain):
            raise ModelError(f"parameter {self.name!r} has duplicate domain values")
        kinds = {type(v) for v in self.domain}
        if not (kinds <= {int} or kinds <= {str}):
            raise ModelError(
                f"parameter {self.name!r} mixes integer and symbolic values"
            )
        if self.origin not in (EXPLICIT_LIST, INTEGER_RANGE):
            raise ModelError(f"parameter {self.name!r}: unknown origin {self.origin!r}")
        if self.origin == INTEGER_RANGE:
            if kinds != {int}:
                raise ModelError(
                    f"parameter {self.name!r}: integer-range origin on symbolic domain"
                )
            lo = self.domain[0]
            if self.domain != tuple(range(lo, lo + len(self.domain))):
                raise ModelError(
                    f"parameter {self.name!r}: integer-range domain must be a "
                    "contiguous ascending sequence"
                )

    @property
    def cardinality(self) -> int:
        return len(self.domain)

    @property
    def is_integer(self) -> bool:
        return isinstance(self.domain[0], int)


@dataclass(frozen=True)
class EquivalenceClassSpec:
    """One equivalence class of a parameter's domain.

    ``members`` are kept in the parameter's domain order; across one
    parameter's classes they must be pairwise disjoint and jointly cover the
    whole domain.
    """

    parameter: str
    label: str
    members: tuple[Value, ...]

    def __post_init__(self) -> None:
        if not self.members:
            raise ModelError(
                f"class {self.label!r} of {self.parameter!r} has no members"
            )
        if len(set(self.members)) != len(self.members):
            raise ModelError(
                f"class {self.label!r} of {self.parameter!r} repeats members"
            )


@dataclass(frozen=True)
class ParameterModel:
    """The single source of truth for generation: parameters, constraints, classes.

    ``cross_suppressions`` records ``suppress-cross`` directives from the
    template; they only affect emitted coverage models, never validity.
    """

    parameters: tuple[Parameter, ...]
    constraints: tuple[Expr, ...] = ()
    classes: tuple[EquivalenceClassSpec, ...] = ()
    cross_suppressions: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        names = [p.name for p in self.parameters]
        if len(set(names)) != len(names):
            raise ModelError("parameter names must be unique")
        known = set(names)
        for c in self.constraints:
            missing = referenced_parameters(c) - known
            if missing:
                raise ModelError(
                    f"constraint references unknown parameter(s): {sorted(missing)}"
                )
            self._check_constraint_types(c)
        for cls in self.classes:
            if cls.parameter not in known:
                raise ModelError(
                    f"class {cls.label!r} references unknown parameter {cls.parameter!r}"
                )
            dom = set(self.parameter(cls.parameter).domain)
            outside = [v for v in cls.members if v not in dom]
            if outside:
                raise ModelError(
                    f"class {cls.label!r} of {cls.parameter!r} has members outside "
                    f"the domain: {outside}"
                )
        self._check_partitions()
        for a, b in self.cross_suppressions:
            if a not in known or b not in known:
                raise ModelError(f"cross suppression names unknown parameter: {a}, {b}")
            if a == b:
                raise ModelError(f"cross suppression pairs {a!r} with itself")

    def _check_constraint_types(self, expr: Expr) -> None:
        if isinstance(expr, CompareValue):
            p = self.parameter(expr.param)
            if isinstance(expr.value, int) != p.is_integer:
                raise ModelError(
                    f"constraint compares {expr.param!r} with a literal of the "
                    "wrong type"
                )
            if expr.op in ORDERING_OPS and not p.is_integer:
                raise ModelError(
                    f"ordering comparison on symbolic parameter {expr.param!r}"
                )
        elif isinstance(expr, CompareParams):
            left, right = self.parameter(expr.left), self.parameter(expr.right)
            if not (left.is_integer and right.is_integer):
                raise ModelError(
                    f"comparison between {expr.left!r} and {expr.right!r} requires "
                    "integer domains on both sides"
                )
        elif isinstance(expr, (And, Or)):
            for t in expr.terms:
                self._check_constraint_types(t)
        elif isinstance(expr, Not):
            self._check_constraint_types(expr.term)
        elif isinstance(expr, IfThen):
            self._check_constraint_types(expr.cond)
            self._check_constraint_types(expr.then)
            if expr.orelse is not None:
                self._check_constraint_types(expr.orelse)

    def _check_partitions(self) -> None:
        by_param: dict[str, list[EquivalenceClassSpec]] = {}
        for cls in self.classes:
            by_param.setdefault(cls.parameter, []).append(cls)
        for pname, group in by_param.items():
            labels = [c.label for c in group]
            if len(set(labels)) != len(labels):
                raise ModelError(f"duplicate class label for parameter {pname!r}")
            seen: dict[Value, str] = {}
            for cls in group:
                for v in cls.members:
                    if v in seen:
                        raise ModelError(
                            f"classes {seen[v]!r} and {cls.label!r} of {pname!r} "
                            f"overlap at value {v!r}"
                        )
                    seen[v] = cls.label
            domain = set(self.parameter(pname).domain)
            if set(seen) != domain:
                missing = sorted(domain - set(seen), key=str)
                raise ModelError(
                    f"classes of {pname!r} do not cover the whole domain "
                    f"(completeness rule); uncovered: {missing}"
                )

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.parameters)

    def parameter(self, name: str) -> Parameter:
        for p in self.parameters:
            if p.name == name:
                return p
        raise ModelError(f"unknown parameter {name!r}")

    def index(self, name: str) -> int:
        for i, p in enumerate(self.parameters):
            if p.name == name:
                return i
        raise ModelError(f"unknown parameter {name!r}")

    def classes_for(self, name: str) -> tuple[EquivalenceClassSpec, ...]:
        return tuple(c for c in self.classes if c.parameter == name)


Configuration = Mapping[str, Value]


@dataclass(frozen=True)
class CoveringArray:
    """An ordered list of complete configurations claiming t-way coverage.

    Rows are value tuples aligned with ``param_names``; ``model_hash`` is the
    digest of the model the array was generated from, so stale artifacts are
    detectable.
    """

    order_t: int
    param_names: tuple[str, ...]
    rows: tuple[tuple[Value, ...], ...]
    model_hash: str

    def __post_init__(self) -> None:
        if self.order_t < 1:
            raise ModelError("covering array order must be >= 1")
        width = len(self.param_names)
        for row in self.rows:
            if len(row) != width:
                raise ModelError("covering array row width does not match header")
        if len(set(self.rows)) != len(self.rows):
            raise ModelError("covering array contains duplicate rows")

    def __len__(self) -> int:
        return len(self.rows)

    def configurations(self) -> list[dict[str, Value]]:
        return [dict(zip(self.param_names, row)) for row in self.rows]


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def is_valid(model: ParameterModel, cfg: Configuration) -> bool:
    """True iff every constraint evaluates true under the complete configuration."""
    missing = set(model.names) - set(cfg)
    if missing:
        raise ModelError(f"configuration is missing parameter(s): {sorted(missing)}")
    try:
        return all(evaluate(c, cfg) for c in model.constraints)
    except KeyError as exc:  # pragma: no cover - guarded by model validation
        raise ModelError(f"constraint references unknown parameter {exc}") from exc


def in_domain(model: ParameterModel, cfg: Configuration) -> bool:
    """True iff every assigned value belongs to its parameter's domain."""
    return all(cfg[p.name] in p.domain for p in model.parameters)


def exhaustive_count(model: ParameterModel) -> int:
    """Product of all parameter cardinalities; constraints are ignored."""
    total = 1
    for p in model.parameters:
        total *= p.cardinality
    return total


# ---------------------------------------------------------------------------
# Canonical serialization and hashing
# ---------------------------------------------------------------------------


def _compress_runs(values: tuple[Value, ...]) -> str:
    """Comma list with contiguous ascending integer runs folded to lo..hi."""
    if not values or isinstance(values[0], str):
        return ", ".join(str(v) for v in values)
    parts: list[str] = []
    run_start = prev = values[0]
    for v in list(values[1:]) + [None]:  # type: ignore[list-item]
        if v is not None and v == prev + 1:
            prev = v
            continue
        parts.append(str(run_start) if run_start == prev else f"{run_start}..{prev}")
        if v is not None:
            run_start = prev = v
    return ", ".join(parts)


def _domain_text(p: Parameter) -> str:
    if p.origin == INTEGER_RANGE:
        return f"{p.domain[0]}..{p.domain[-1]}"
    return ", ".join(str(v) for v in p.domain)


def serialize_template(model: ParameterModel) -> str:
    """Canonical template text; re-parsing yields a structurally equal model."""
    lines = [f"{p.name}: {_domain_text(p)}" for p in model.parameters]
    if model.constraints:
        lines.append("")
        lines.extend(f"{constraint_to_text(c)};" for c in model.constraints)
    if model.cross_suppressions:
        lines.append("")
        lines.extend(f"# suppress-cross: {a} {b}" for a, b in model.cross_suppressions)
    return "\n".join(lines) + "\n"


def serialize_classes(model: ParameterModel) -> str:
    """Canonical equivalence-class sidecar text for the model's classes."""
    lines = [
        f"class {c.parameter} {c.label} {{ {_compress_runs(c.members)} }}"
        for c in model.classes
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def canonical_text(model: ParameterModel) -> str:
    """Template plus class sidecar in canonical form; input to the digest."""
    text = serialize_template(model)
    if model.classes:
        text += "\x00" + serialize_classes(model)
    return text


@lru_cache(maxsize=256)
def model_hash(model: ParameterModel) -> str:
    """Content digest of the canonical serialized model."""
    return hashlib.sha256(canonical_text(model).encode("utf-8")).hexdigest()
