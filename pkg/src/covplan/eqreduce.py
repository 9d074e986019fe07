"""Equivalence-class domain reduction with boundary-value representatives.

The executable strategy keeps, for every class, its minimum and maximum
member (domain-order endpoints for symbolic parameters) and replaces the
parameter's domain by the union of those representatives.  The other three
classic selection strategies are described in the catalog but are not
executable here; the robust variants would need values outside the declared
domains, and such negative tests are out of scope for this toolchain.
"""

from __future__ import annotations

from dataclasses import dataclass

from .engine import find_valid_configuration
from .errors import ReductionError, UnsupportedStrategyError
from .model import (
    EXPLICIT_LIST,
    EquivalenceClassSpec,
    Parameter,
    ParameterModel,
    Value,
    constraint_to_text,
    literal_references,
)

__all__ = [
    "ReductionTrace",
    "ReductionRow",
    "StrategyDescriptor",
    "representatives",
    "apply_classes",
    "strategy_catalog",
    "require_strategy",
]


@dataclass(frozen=True)
class ReductionRow:
    parameter: str
    original_cardinality: int
    classes_applied: tuple[str, ...]
    representatives: tuple[Value, ...]
    resulting_cardinality: int


@dataclass(frozen=True)
class ReductionTrace:
    """What the reduction did, plus diagnostics for the report.

    ``assumption`` records that class members being behaviorally
    interchangeable is taken on trust here; proving it is a job for a formal
    tool, and the report carries the obligation onward.
    """

    rows: tuple[ReductionRow, ...] = ()
    warnings: tuple[str, ...] = ()
    assumption: str = (
        "equivalence classes are assumed behaviorally uniform; "
        "this reduction does not prove it"
    )


@dataclass(frozen=True)
class StrategyDescriptor:
    name: str
    implemented: bool
    selection_rule: str
    rejection_reason: str | None = None


def strategy_catalog() -> tuple[StrategyDescriptor, ...]:
    """The four classic selection strategies; only strong-normal is executable."""
    return (
        StrategyDescriptor(
            name="weak-normal",
            implemented=False,
            selection_rule="one valid value per class, classes visited in parallel",
            rejection_reason=(
                "subsumed by the strong-normal reduction: pairwise generation "
                "over the reduced domains already combines class representatives"
            ),
        ),
        StrategyDescriptor(
            name="strong-normal",
            implemented=True,
            selection_rule=(
                "every combination of class representatives; realized as "
                "boundary-value domain reduction (class minimum and maximum) "
                "feeding the generator"
            ),
        ),
        StrategyDescriptor(
            name="weak-robust",
            implemented=False,
            selection_rule="one invalid value alongside valid class picks",
            rejection_reason=(
                "requires values outside the declared domains; negative testing "
                "of hardware configurations is out of scope"
            ),
        ),
        StrategyDescriptor(
            name="strong-robust",
            implemented=False,
            selection_rule="every combination of valid and invalid class elements",
            rejection_reason=(
                "requires values outside the declared domains; negative testing "
                "of hardware configurations is out of scope"
            ),
        ),
    )


def require_strategy(name: str) -> StrategyDescriptor:
    """Resolve a strategy name, rejecting the non-executable ones."""
    for d in strategy_catalog():
        if d.name == name:
            if not d.implemented:
                raise UnsupportedStrategyError(
                    f"strategy {name!r} is not executable: {d.rejection_reason}"
                )
            return d
    known = ", ".join(d.name for d in strategy_catalog())
    raise UnsupportedStrategyError(f"unknown strategy {name!r}; known: {known}")


def representatives(cls: EquivalenceClassSpec) -> tuple[Value, ...]:
    """Boundary representatives of one class.

    Integer members: minimum and maximum by value.  Symbolic members: first
    and last in domain order (members are stored in domain order).  A
    singleton collapses to itself.
    """
    members = cls.members
    if isinstance(members[0], int):
        lo, hi = min(members), max(members)
    else:
        lo, hi = members[0], members[-1]
    return (lo,) if lo == hi else (lo, hi)


def _reduced_parameter(param: Parameter, classes) -> tuple[Parameter, ReductionRow]:
    keep: set[Value] = set()
    for cls in classes:
        keep.update(representatives(cls))
    new_domain = tuple(v for v in param.domain if v in keep)
    if new_domain == param.domain:
        reduced = param
    else:
        reduced = Parameter(param.name, new_domain, EXPLICIT_LIST)
    row = ReductionRow(
        parameter=param.name,
        original_cardinality=param.cardinality,
        classes_applied=tuple(c.label for c in classes),
        representatives=new_domain,
        resulting_cardinality=len(new_domain),
    )
    return reduced, row


def apply_classes(model: ParameterModel) -> tuple[ParameterModel, ReductionTrace]:
    """Replace every classed parameter's domain by its class representatives.

    Unclassed parameters and all constraints are carried over untouched.  A
    constraint literal that no longer exists in the reduced domain produces a
    warning (the classes should be re-derived), never a silent rewrite.  If
    the reduction leaves no valid configuration at all, the error names a
    parameter whose reduction caused it.
    """
    if not model.classes:
        return model, ReductionTrace()

    new_params: list[Parameter] = []
    rows: list[ReductionRow] = []
    reduced_names: list[str] = []
    for param in model.parameters:
        classes = model.classes_for(param.name)
        if not classes:
            new_params.append(param)
            continue
        reduced, row = _reduced_parameter(param, classes)
        new_params.append(reduced)
        rows.append(row)
        if reduced is not param:
            reduced_names.append(param.name)

    reduced_model = ParameterModel(
        parameters=tuple(new_params),
        constraints=model.constraints,
        classes=(),
        cross_suppressions=model.cross_suppressions,
    )

    warnings: list[str] = []
    by_name = {p.name: p for p in reduced_model.parameters}
    originals = {p.name: p for p in model.parameters}
    for c in model.constraints:
        for pname, literal in literal_references(c):
            if literal in originals[pname].domain and literal not in by_name[pname].domain:
                warnings.append(
                    f"constraint '{constraint_to_text(c)}' references value "
                    f"{literal!r} of {pname!r}, which the reduction removed; "
                    "re-derive the classes if that value must stay testable"
                )

    if model.constraints and find_valid_configuration(reduced_model) is None:
        for name in reduced_names:
            restored = ParameterModel(
                parameters=tuple(
                    originals[p.name] if p.name == name else p
                    for p in reduced_model.parameters
                ),
                constraints=model.constraints,
            )
            if find_valid_configuration(restored) is not None:
                raise ReductionError(
                    f"reducing {name!r} removed every constraint-satisfying "
                    "value; adjust its classes",
                    parameter=name,
                )
        raise ReductionError(
            "reduction left no valid configuration (parameters involved: "
            + ", ".join(reduced_names) + ")",
        )

    return reduced_model, ReductionTrace(rows=tuple(rows), warnings=tuple(warnings))
