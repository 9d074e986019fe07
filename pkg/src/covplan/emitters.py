"""Downstream artifact generation and achieved-coverage measurement.

Emitted documents are deterministic for fixed inputs, end with a trailing
newline, and embed the model digest so stale artifacts can be spotted.  The
session format is a minimal VSIF-like dialect (documented in the README),
not a claim of compatibility with any vendor grammar.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

from .engine import TupleUniverse, enumerate_tuples
from .errors import InternalConsistencyError, ModelError, StaleArtifactError
from .eqreduce import ReductionTrace
from .model import (
    Configuration,
    CoveringArray,
    ParameterModel,
    Value,
    in_domain,
    is_valid,
    model_hash,
)
from .structcheck import EligibilityVerdict, PruneLogEntry

__all__ = [
    "ComponentCoverage",
    "StageRow",
    "CoverageReport",
    "emit_coverage_model",
    "emit_session",
    "measure_coverage",
    "emit_report",
    "stage_table_csv",
    "humanize_hours",
]


@dataclass(frozen=True)
class ComponentCoverage:
    name: str
    kind: str  # "coverpoint" | "cross"
    hits: int
    universe: int
    missing: tuple[tuple[Value, ...], ...] = ()

    @property
    def percentage(self) -> float:
        return 100.0 * self.hits / self.universe if self.universe else 100.0


@dataclass(frozen=True)
class StageRow:
    label: str
    regressions: int


@dataclass(frozen=True)
class CoverageReport:
    """Per-component hit ratios plus the stage-wise reduction table."""

    components: tuple[ComponentCoverage, ...]
    invalid_rows: tuple[int, ...] = ()
    stage_rows: tuple[StageRow, ...] = ()

    @property
    def overall_percentage(self) -> float:
        total_universe = sum(c.universe for c in self.components)
        total_hits = sum(c.hits for c in self.components)
        if total_universe == 0:
            return 100.0
        return 100.0 * total_hits / total_universe

    def with_stages(self, stage_rows: tuple[StageRow, ...]) -> "CoverageReport":
        return replace(self, stage_rows=stage_rows)


def _crosses(model: ParameterModel) -> list[tuple[str, str]]:
    suppressed = set(model.cross_suppressions)
    out = []
    for a, b in itertools.combinations(model.names, 2):
        if (a, b) not in suppressed and (b, a) not in suppressed:
            out.append((a, b))
    return out


def _bin_name(value: Value) -> str:
    text = str(value).replace("-", "m")
    return f"v_{text}"


def emit_coverage_model(model: ParameterModel, pairs: TupleUniverse) -> str:
    """Configuration covergroup: one coverpoint per parameter, one cross per pair.

    Cross bins are restricted to constraint-valid pairs via ignore lists, so a
    regression set can reach 100% without hitting impossible combinations.
    Pairs named by suppress-cross directives are left out entirely.
    """
    if not model.parameters:
        raise ModelError("cannot emit a coverage model without parameters")
    if pairs.order_t != 2:
        raise ModelError("coverage model requires the t=2 pair universe")
    lines = [
        "// configuration coverage model",
        f"// model_hash: {model_hash(model)}",
        "covergroup cg_config;",
    ]
    for p in model.parameters:
        lines.append(f"  cp_{p.name} : coverpoint cfg.{p.name} {{")
        for v in p.domain:
            lines.append(f"    bins {_bin_name(v)} = {{ {v} }};")
        lines.append("  }")
    pair_sets = pairs.sets_by_combo
    for a, b in _crosses(model):
        valid = pair_sets.get((a, b), frozenset())
        dom_a, dom_b = model.parameter(a).domain, model.parameter(b).domain
        invalid = [
            (va, vb)
            for va, vb in itertools.product(dom_a, dom_b)
            if (va, vb) not in valid
        ]
        head = f"  cx_{a}_{b} : cross cp_{a}, cp_{b}"
        if not invalid:
            lines.append(head + ";")
            continue
        lines.append(head + " {")
        for n, (va, vb) in enumerate(invalid, start=1):
            lines.append(
                f"    ignore_bins inv_{n} = binsof(cp_{a}) intersect {{ {va} }} && "
                f"binsof(cp_{b}) intersect {{ {vb} }};"
            )
        lines.append("  }")
    lines.append("endgroup")
    return "\n".join(lines) + "\n"


def emit_session(array: CoveringArray, session_name: str) -> str:
    """Regression-session document: one test entry per covering-array row."""
    if not array.rows:
        raise ModelError("cannot emit a session for an empty array")
    width = max(3, len(str(len(array.rows))))
    lines = [
        f"session {session_name} {{",
        f"  model_hash : {array.model_hash};",
        f"  order_t : {array.order_t};",
        f"  run_count : {len(array.rows)};",
    ]
    for i, row in enumerate(array.rows, start=1):
        lines.append(f"  test t_{i:0{width}d} {{")
        for name, value in zip(array.param_names, row):
            lines.append(f"    param_{name} : {value};")
        lines.append("  };")
    lines.append("}")
    return "\n".join(lines) + "\n"


def measure_coverage(
    model: ParameterModel, executed: list[Configuration]
) -> CoverageReport:
    """Hit ratios of executed configurations against the valid universes.

    Coverpoint universes are the t=1 extendable values, cross universes the
    valid pairs.  Rows that violate constraints or leave their domains are
    reported separately and never counted as hits.
    """
    for idx, cfg in enumerate(executed):
        unknown = set(cfg) - set(model.names)
        if unknown:
            raise StaleArtifactError(
                f"run {idx} references unknown parameter(s): {sorted(unknown)}"
            )
        missing = set(model.names) - set(cfg)
        if missing:
            raise StaleArtifactError(
                f"run {idx} is missing parameter(s): {sorted(missing)}"
            )

    singles = enumerate_tuples(model, 1) if model.parameters else None
    pairs = enumerate_tuples(model, 2) if len(model.parameters) >= 2 else None

    invalid: list[int] = []
    valid_cfgs: list[Configuration] = []
    for idx, cfg in enumerate(executed):
        if not in_domain(model, cfg) or not is_valid(model, cfg):
            invalid.append(idx)
        else:
            valid_cfgs.append(cfg)

    components: list[ComponentCoverage] = []
    assert singles is not None
    for p in model.parameters:
        universe = singles.tuples_by_combo[(p.name,)]
        seen = {cfg[p.name] for cfg in valid_cfgs}
        missing_vals = tuple(t for t in universe if t[0] not in seen)
        components.append(
            ComponentCoverage(
                name=f"cp_{p.name}",
                kind="coverpoint",
                hits=len(universe) - len(missing_vals),
                universe=len(universe),
                missing=missing_vals,
            )
        )
    if pairs is not None:
        pair_sets = pairs.tuples_by_combo
        for a, b in _crosses(model):
            universe_pairs = pair_sets[(a, b)]
            seen_pairs = {(cfg[a], cfg[b]) for cfg in valid_cfgs}
            missing_pairs = tuple(t for t in universe_pairs if t not in seen_pairs)
            components.append(
                ComponentCoverage(
                    name=f"cx_{a}_{b}",
                    kind="cross",
                    hits=len(universe_pairs) - len(missing_pairs),
                    universe=len(universe_pairs),
                    missing=missing_pairs,
                )
            )
    return CoverageReport(components=tuple(components), invalid_rows=tuple(invalid))


def humanize_hours(hours: float) -> str:
    """Days with one decimal at or above one day, hours below."""
    if hours >= 24.0:
        return f"{hours / 24.0:.1f} days"
    return f"{hours:.1f} hours"


def _format_ratio(ratio: float) -> str:
    if ratio == int(ratio):
        return f"{int(ratio)}x"
    return f"{ratio:.1f}x"


def stage_table_csv(stage_rows: tuple[StageRow, ...], per_run_cost_hours: float) -> str:
    lines = ["stage,regressions,runtime_hours"]
    for row in stage_rows:
        lines.append(
            f"{row.label},{row.regressions},{row.regressions * per_run_cost_hours:g}"
        )
    return "\n".join(lines) + "\n"


def emit_report(
    report: CoverageReport,
    *,
    digest: str,
    per_run_cost_hours: float,
    title: str = "configuration regression plan",
    trace: ReductionTrace | None = None,
    verdicts: tuple[EligibilityVerdict, ...] = (),
    prune_log: tuple[PruneLogEntry, ...] = (),
    pair_universe: TupleUniverse | None = None,
    notes: tuple[str, ...] = (),
) -> str:
    """Markdown report: stage table, reduction trace, verdicts, coverage, notes.

    Stage counts must be monotone nonincreasing; a violation means some
    pipeline stage inflated the regression set and is reported as an internal
    inconsistency rather than silently published.
    """
    stages = report.stage_rows
    if not stages:
        raise ModelError("report requires at least the brute-force and final stages")
    for earlier, later in zip(stages, stages[1:]):
        if later.regressions > earlier.regressions:
            raise InternalConsistencyError(
                f"stage {later.label!r} has more regressions "
                f"({later.regressions}) than {earlier.label!r} "
                f"({earlier.regressions})"
            )

    lines = [f"# Report: {title}", "", f"Model digest: `{digest}`", ""]
    lines += ["## Stage summary", ""]
    lines.append("| Stage | Regressions | Estimated runtime |")
    lines.append("| --- | ---: | ---: |")
    for row in stages:
        runtime = humanize_hours(row.regressions * per_run_cost_hours)
        lines.append(f"| {row.label} | {row.regressions:,} | {runtime} |")
    lines.append("")
    if stages[-1].regressions > 0 and len(stages) > 1:
        ratio = stages[0].regressions / stages[-1].regressions
        lines.append(f"Reduction vs {stages[0].label}: {_format_ratio(ratio)}")
        lines.append("")

    if pair_universe is not None:
        lines += ["## Value-tuple universe", ""]
        lines.append(
            f"Order t = {pair_universe.order_t}; parameter combinations: "
            f"{len(pair_universe.combos)}; total valid tuples: "
            f"{pair_universe.total_count}."
        )
        lines.append("")
        lines.append("| Combination | Valid tuples |")
        lines.append("| --- | ---: |")
        for combo, count in pair_universe.counts.items():
            lines.append(f"| {' x '.join(combo)} | {count} |")
        lines.append("")

    if trace is not None and trace.rows:
        lines += ["## Equivalence-class reduction", ""]
        lines.append("| Parameter | Classes | Representatives | Cardinality |")
        lines.append("| --- | --- | --- | ---: |")
        for row in trace.rows:
            reps = ", ".join(str(v) for v in row.representatives)
            lines.append(
                f"| {row.parameter} | {', '.join(row.classes_applied)} | {reps} | "
                f"{row.original_cardinality} -> {row.resulting_cardinality} |"
            )
        lines.append("")
        lines.append(f"Assumption: {trace.assumption}.")
        lines.append("")
        for w in trace.warnings:
            lines.append(f"Warning: {w}")
        if trace.warnings:
            lines.append("")

    if verdicts:
        lines += ["## Structural check verdicts", ""]
        lines.append("| Parameter | Eligible | Reason | Witness |")
        lines.append("| --- | --- | --- | --- |")
        for v in verdicts:
            witness = " -> ".join(v.witness) if v.witness else "-"
            lines.append(
                f"| {v.parameter} | {'yes' if v.eligible else 'no'} | {v.reason} | "
                f"{witness} |"
            )
        lines.append("")
    if prune_log:
        lines += ["## Block-level proof obligations", ""]
        lines.append(
            "Each pruned parameter must be discharged by formal verification of "
            "its owning block over the full value range:"
        )
        lines.append("")
        lines.append("| Parameter | Block | Values to prove |")
        lines.append("| --- | --- | --- |")
        for entry in prune_log:
            values = ", ".join(str(v) for v in entry.domain)
            lines.append(f"| {entry.parameter} | {entry.block} | {values} |")
        lines.append("")

    lines += ["## Achieved configuration coverage", ""]
    if report.components:
        lines.append("| Component | Hits | Universe | Coverage |")
        lines.append("| --- | ---: | ---: | ---: |")
        for comp in report.components:
            lines.append(
                f"| {comp.name} | {comp.hits} | {comp.universe} | "
                f"{comp.percentage:.1f}% |"
            )
        lines.append("")
        lines.append(f"Overall: {report.overall_percentage:.1f}%")
    else:
        lines.append("No executed runs were measured.")
    lines.append("")
    if report.invalid_rows:
        lines.append(
            f"Invalid executed rows (never counted as hits): "
            f"{list(report.invalid_rows)}"
        )
        lines.append("")
    missing_any = [c for c in report.components if c.missing]
    if missing_any:
        lines.append("Missing tuples:")
        for comp in missing_any:
            shown = ", ".join(str(t) for t in comp.missing[:20])
            suffix = " ..." if len(comp.missing) > 20 else ""
            lines.append(f"- {comp.name}: {shown}{suffix}")
        lines.append("")

    if notes:
        lines += ["## Notes", ""]
        for note in notes:
            lines.append(f"- {note}")
        lines.append("")

    text = "\n".join(lines)
    return text if text.endswith("\n") else text + "\n"
