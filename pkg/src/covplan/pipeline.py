"""Pipeline orchestration: prepare, extract, execute, validate, measure.

``execute`` runs the whole flow in-process (prepare and extract are applied
implicitly when their inputs are present) and writes every artifact:
canonical and reduced templates, the covering-array CSV with its meta
sidecar, the coverage-model file, the session file, and the report in both
Markdown and CSV form.  All outputs are deterministic for a fixed seed, so
re-running a stage without input changes reproduces byte-identical files.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from . import arrayio
from .dsl import parse_classes, parse_template, serialize_template
from .engine import (
    BRUTE_FORCE_LIMIT,
    GenerationConfig,
    TupleUniverse,
    ValidationVerdict,
    enumerate_tuples,
    generate_array,
    lower_bound,
    validate_array,
)
from .emitters import (
    CoverageReport,
    StageRow,
    emit_coverage_model,
    emit_report,
    emit_session,
    measure_coverage,
    stage_table_csv,
)
from .eqreduce import ReductionTrace, apply_classes, require_strategy
from .errors import CovplanError, StaleArtifactError
from .model import (
    CoveringArray,
    ParameterModel,
    exhaustive_count,
    model_hash,
)
from .structcheck import (
    EligibilityVerdict,
    PruneLogEntry,
    check_parameter,
    load_graph,
    prune_model,
)

# Optional intermediate stages are generated only when cheap enough to matter.
_STAGE_ROW_CAP = 5_000
_FINAL_ROW_CAP = 50_000


@dataclass(frozen=True)
class PipelineConfig:
    template: Path
    classes: Path | None = None
    graph: Path | None = None
    order_t: int = 2
    seed: int = 0
    per_run_cost_hours: float = 24.0
    out_dir: Path = Path("covplan_out")
    suppress_crosses: tuple[tuple[str, str], ...] = ()
    notes: tuple[str, ...] = ()
    force: bool = False
    strategy: str = "strong-normal"
    candidate_pool: int = 50

    def __post_init__(self) -> None:
        if self.order_t < 1:
            raise CovplanError("order must be >= 1")


def resolve_out_dir(flag_value: str | None) -> Path:
    if flag_value:
        return Path(flag_value)
    env = os.environ.get("COVPLAN_OUT")
    return Path(env) if env else Path("covplan_out")


def _load_model(cfg: PipelineConfig) -> ParameterModel:
    text = cfg.template.read_text(encoding="utf-8")
    model = parse_template(text, source=str(cfg.template))
    extra = [
        pair
        for pair in cfg.suppress_crosses
        if pair not in model.cross_suppressions
        and (pair[1], pair[0]) not in model.cross_suppressions
    ]
    if extra:
        order = {name: i for i, name in enumerate(model.names)}
        normalized = []
        for a, b in extra:
            if a not in order or b not in order:
                raise CovplanError(f"--suppress-cross names unknown parameter: {a}, {b}")
            normalized.append((a, b) if order[a] < order[b] else (b, a))
        model = ParameterModel(
            parameters=model.parameters,
            constraints=model.constraints,
            classes=model.classes,
            cross_suppressions=model.cross_suppressions + tuple(normalized),
        )
    return model


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


@dataclass(frozen=True)
class PrepareResult:
    model: ParameterModel
    canonical_path: Path
    table_text: str


def run_prepare(cfg: PipelineConfig) -> PrepareResult:
    """Parse the template, write its canonical form, summarize the space."""
    model = _load_model(cfg)
    stem = cfg.template.stem
    canonical = _write(
        cfg.out_dir / f"{stem}.canonical.pict", serialize_template(model)
    )
    width = max(len("parameter"), max(len(p.name) for p in model.parameters))
    lines = [f"{'parameter'.ljust(width)}  cardinality  origin"]
    for p in model.parameters:
        lines.append(f"{p.name.ljust(width)}  {p.cardinality:<11}  {p.origin}")
    lines.append(f"constraints: {len(model.constraints)}")
    lines.append(f"exhaustive configurations: {exhaustive_count(model):,}")
    return PrepareResult(model, canonical, "\n".join(lines))


@dataclass(frozen=True)
class ExtractResult:
    original: ParameterModel
    final: ParameterModel
    trace: ReductionTrace
    verdicts: tuple[EligibilityVerdict, ...]
    prune_log: tuple[PruneLogEntry, ...]
    reduced_path: Path
    notices: tuple[str, ...] = ()


def run_extract(cfg: PipelineConfig) -> ExtractResult:
    """Top-down class reduction, then bottom-up structural pruning."""
    require_strategy(cfg.strategy)
    model = _load_model(cfg)
    original = model
    notices: list[str] = []

    trace = ReductionTrace()
    if cfg.classes is not None:
        classed = parse_classes(
            cfg.classes.read_text(encoding="utf-8"), model, source=str(cfg.classes)
        )
        model, trace = apply_classes(classed)
        notices.append(
            f"equivalence classes applied to {len(trace.rows)} parameter(s)"
        )

    verdicts: tuple[EligibilityVerdict, ...] = ()
    prune_log: tuple[PruneLogEntry, ...] = ()
    if cfg.graph is not None:
        graph = load_graph(
            cfg.graph.read_text(encoding="utf-8"), source=str(cfg.graph)
        )
        verdicts = tuple(check_parameter(graph, name) for name in model.names)
        model, prune_log = prune_model(model, verdicts)
        notices.append(f"structural pruning removed {len(prune_log)} parameter(s)")

    stem = cfg.template.stem
    reduced_path = _write(
        cfg.out_dir / f"{stem}.reduced.pict", serialize_template(model)
    )
    _write(
        cfg.out_dir / f"{stem}.trace.json",
        json.dumps(
            {
                "rows": [
                    {
                        "parameter": r.parameter,
                        "original_cardinality": r.original_cardinality,
                        "classes": list(r.classes_applied),
                        "representatives": list(r.representatives),
                        "resulting_cardinality": r.resulting_cardinality,
                    }
                    for r in trace.rows
                ],
                "warnings": list(trace.warnings),
                "assumption": trace.assumption,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
    )
    _write(
        cfg.out_dir / f"{stem}.prune.json",
        json.dumps(
            {
                "verdicts": [
                    {
                        "parameter": v.parameter,
                        "eligible": v.eligible,
                        "reason": v.reason,
                        "witness": list(v.witness),
                    }
                    for v in verdicts
                ],
                "removed": [
                    {
                        "parameter": e.parameter,
                        "block": e.block,
                        "values": list(e.domain),
                    }
                    for e in prune_log
                ],
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
    )
    return ExtractResult(
        original, model, trace, verdicts, prune_log, reduced_path, tuple(notices)
    )


def _stage_tractable(model: ParameterModel, order_t: int) -> bool:
    if exhaustive_count(model) > BRUTE_FORCE_LIMIT:
        return False
    return lower_bound(model, order_t) <= _STAGE_ROW_CAP


@dataclass(frozen=True)
class ExecuteResult:
    extract: ExtractResult
    array: CoveringArray
    coverage: CoverageReport
    pair_universe: TupleUniverse
    stage_rows: tuple[StageRow, ...]
    artifacts: dict[str, Path] = field(default_factory=dict)


def run_execute(cfg: PipelineConfig) -> ExecuteResult:
    """Generate the array and emit every downstream artifact."""
    extract = run_extract(cfg)
    original, final = extract.original, extract.final

    stage_rows: list[StageRow] = [
        StageRow("brute-force", exhaustive_count(original))
    ]
    reductions_present = final is not original
    if reductions_present and _stage_tractable(original, cfg.order_t):
        base_label = "+constraints" if original.constraints else "+pairwise"
        base_rows = generate_array(
            original,
            GenerationConfig(cfg.order_t, cfg.seed, cfg.candidate_pool),
        )
        stage_rows.append(StageRow(base_label, len(base_rows.rows)))

    mid_model: ParameterModel | None = None
    if cfg.classes is not None and cfg.graph is not None:
        # Both reductions applied: record the class-only stage when cheap.
        classed = parse_classes(
            cfg.classes.read_text(encoding="utf-8"), original, source=str(cfg.classes)
        )
        mid_model, _ = apply_classes(classed)

    if mid_model is not None and mid_model is not original:
        if _stage_tractable(mid_model, cfg.order_t):
            mid_array = generate_array(
                mid_model, GenerationConfig(cfg.order_t, cfg.seed, cfg.candidate_pool)
            )
            stage_rows.append(StageRow("+eq-class", len(mid_array.rows)))

    if lower_bound(final, cfg.order_t) > _FINAL_ROW_CAP:
        raise CovplanError(
            "final model would need more than "
            f"{_FINAL_ROW_CAP} rows; add equivalence classes or pruning first"
        )
    array = generate_array(
        final, GenerationConfig(cfg.order_t, cfg.seed, cfg.candidate_pool)
    )
    if cfg.graph is not None and extract.prune_log:
        final_label = "+structural"
    elif cfg.classes is not None and extract.trace.rows:
        final_label = "+eq-class"
    elif original.constraints:
        final_label = "+constraints"
    else:
        final_label = "+pairwise"
    if not stage_rows or stage_rows[-1].label != final_label:
        stage_rows.append(StageRow(final_label, len(array.rows)))
    else:
        stage_rows[-1] = StageRow(final_label, len(array.rows))

    if len(final.parameters) >= 2:
        pair_universe = enumerate_tuples(final, 2)
    else:
        pair_universe = TupleUniverse(2, final.names, {})
    coverage = measure_coverage(final, array.configurations())
    coverage = coverage.with_stages(tuple(stage_rows))

    stem = cfg.template.stem
    digest = model_hash(final)
    artifacts: dict[str, Path] = {
        "reduced": extract.reduced_path,
        "array": _write(cfg.out_dir / f"{stem}.rows.csv", arrayio.array_to_csv(array)),
        "meta": _write(
            cfg.out_dir / f"{stem}.rows.meta", arrayio.array_meta_text(array, cfg.seed)
        ),
        "coverage_model": _write(
            cfg.out_dir / f"{stem}.svcov", emit_coverage_model(final, pair_universe)
        ),
        "session": _write(
            cfg.out_dir / f"{stem}.vsif", emit_session(array, session_name=stem)
        ),
        "report": _write(
            cfg.out_dir / f"{stem}.report.md",
            emit_report(
                coverage,
                digest=digest,
                per_run_cost_hours=cfg.per_run_cost_hours,
                title=stem,
                trace=extract.trace,
                verdicts=extract.verdicts,
                prune_log=extract.prune_log,
                pair_universe=pair_universe if pair_universe.combos else None,
                notes=cfg.notes,
            ),
        ),
        "stages": _write(
            cfg.out_dir / f"{stem}.stages.csv",
            stage_table_csv(tuple(stage_rows), cfg.per_run_cost_hours),
        ),
    }
    return ExecuteResult(
        extract, array, coverage, pair_universe, tuple(stage_rows), artifacts
    )


def _final_model(cfg: PipelineConfig) -> ParameterModel:
    model = _load_model(cfg)
    if cfg.classes is not None:
        classed = parse_classes(
            cfg.classes.read_text(encoding="utf-8"), model, source=str(cfg.classes)
        )
        model, _ = apply_classes(classed)
    if cfg.graph is not None:
        graph = load_graph(cfg.graph.read_text(encoding="utf-8"), source=str(cfg.graph))
        verdicts = tuple(check_parameter(graph, name) for name in model.names)
        model, _ = prune_model(model, verdicts)
    return model


@dataclass(frozen=True)
class ValidateResult:
    verdict: ValidationVerdict
    hash_mismatch: bool


def run_validate(cfg: PipelineConfig, array_path: Path) -> ValidateResult:
    """Check a stored array file against the model the flags reconstruct."""
    model = _final_model(cfg)
    meta_path = array_path.with_suffix(".meta")
    meta_text = meta_path.read_text(encoding="utf-8") if meta_path.exists() else None
    array, _seed = arrayio.read_array(
        array_path.read_text(encoding="utf-8"), meta_text, model
    )
    mismatch = array.model_hash != model_hash(model)
    if mismatch and not cfg.force:
        raise StaleArtifactError(
            "array meta hash does not match the model built from the given "
            "flags; re-run with --force to validate anyway"
        )
    verdict = validate_array(model, array, check_hash=False)
    return ValidateResult(verdict, mismatch)


@dataclass(frozen=True)
class MeasureResult:
    report: CoverageReport
    hash_mismatch: bool


def run_measure(cfg: PipelineConfig, runs_path: Path) -> MeasureResult:
    """Measure achieved coverage of executed runs from a CSV file."""
    model = _final_model(cfg)
    meta_path = runs_path.with_suffix(".meta")
    mismatch = False
    if meta_path.exists():
        meta_text = meta_path.read_text(encoding="utf-8")
        _, _ = arrayio.read_array(
            runs_path.read_text(encoding="utf-8"), meta_text, model
        )
        recorded = arrayio._parse_meta(meta_text).get("model_hash")
        mismatch = recorded is not None and recorded != model_hash(model)
        if mismatch and not cfg.force:
            raise StaleArtifactError(
                "runs meta hash does not match the model built from the given "
                "flags; re-run with --force to measure anyway"
            )
    runs = arrayio.read_runs(runs_path.read_text(encoding="utf-8"), model)
    return MeasureResult(measure_coverage(model, runs), mismatch)
