"""Command-line entry point.

Subcommands mirror the pipeline stages:

    covplan prepare  --template model.pict [--out DIR]
    covplan extract  --template model.pict [--classes m.eqcls] [--graph m.dg]
    covplan execute  --template model.pict [...] [--order N] [--seed S]
    covplan validate --template model.pict ARRAY.csv [--force]
    covplan measure  --template model.pict RUNS.csv [--force]

Exit codes: 0 success/covered, 1 user-input error, 2 coverage or validation
failure, 3 internal-consistency error.  ``COVPLAN_OUT`` provides the output
directory when ``--out`` is absent.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from .dsl import ParseError
from .eqreduce import strategy_catalog
from .errors import CovplanError, InternalConsistencyError
from .pipeline import (
    PipelineConfig,
    resolve_out_dir,
    run_execute,
    run_extract,
    run_measure,
    run_prepare,
    run_validate,
)

EXIT_OK = 0
EXIT_USER_ERROR = 1
EXIT_COVERAGE = 2
EXIT_INTERNAL = 3

_DURATION_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*([hdm]?)\s*$", re.IGNORECASE)


def parse_duration_hours(text: str) -> float:
    """'12h', '2d', '30m', or a bare number of hours."""
    m = _DURATION_RE.match(text)
    if not m:
        raise argparse.ArgumentTypeError(
            f"cannot parse duration {text!r}; use forms like 12h, 1.5d, 30m"
        )
    value, unit = float(m.group(1)), m.group(2).lower()
    if unit == "d":
        return value * 24.0
    if unit == "m":
        return value / 60.0
    return value


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--template", required=True, help="template (.pict) file")
    sub.add_argument("--classes", help="equivalence-class sidecar (.eqcls) file")
    sub.add_argument("--graph", help="design-connectivity (.dg) file")
    sub.add_argument("--order", type=int, default=2, help="interaction order t")
    sub.add_argument("--seed", type=int, default=0, help="generation seed")
    sub.add_argument(
        "--per-run-cost",
        type=parse_duration_hours,
        default=24.0,
        metavar="DURATION",
        help="cost of one regression (12h, 1.5d, ...; default 24h)",
    )
    sub.add_argument("--out", help="output directory (fallback: $COVPLAN_OUT)")
    sub.add_argument(
        "--suppress-cross",
        nargs=2,
        action="append",
        default=[],
        metavar=("A", "B"),
        help="leave the cross of parameters A and B out of the coverage model",
    )
    sub.add_argument(
        "--strategy",
        default="strong-normal",
        choices=[d.name for d in strategy_catalog()],
        help="equivalence-class selection strategy (only strong-normal runs)",
    )
    sub.add_argument(
        "--note",
        action="append",
        default=[],
        help="free-text note echoed into the report (repeatable)",
    )
    sub.add_argument("--force", action="store_true", help="proceed on hash mismatch")


def _config(args: argparse.Namespace) -> PipelineConfig:
    return PipelineConfig(
        template=Path(args.template),
        classes=Path(args.classes) if args.classes else None,
        graph=Path(args.graph) if args.graph else None,
        order_t=args.order,
        seed=args.seed,
        per_run_cost_hours=args.per_run_cost,
        out_dir=resolve_out_dir(args.out),
        suppress_crosses=tuple((a, b) for a, b in args.suppress_cross),
        notes=tuple(args.note),
        force=args.force,
        strategy=args.strategy,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covplan",
        description="constraint-aware pairwise regression planning",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_prepare = subs.add_parser("prepare", help="canonicalize and summarize a template")
    _add_common(p_prepare)

    p_extract = subs.add_parser(
        "extract", help="apply class reduction and structural pruning"
    )
    _add_common(p_extract)

    p_execute = subs.add_parser(
        "execute", help="generate the array and all downstream artifacts"
    )
    _add_common(p_execute)

    p_validate = subs.add_parser("validate", help="check an array file for coverage")
    _add_common(p_validate)
    p_validate.add_argument("array", help="covering-array CSV file")

    p_measure = subs.add_parser("measure", help="measure coverage of executed runs")
    _add_common(p_measure)
    p_measure.add_argument("runs", help="executed-runs CSV file")

    return parser


def _cmd_prepare(args: argparse.Namespace) -> int:
    result = run_prepare(_config(args))
    print(result.table_text)
    print(f"canonical template written to {result.canonical_path}")
    return EXIT_OK


def _cmd_extract(args: argparse.Namespace) -> int:
    result = run_extract(_config(args))
    for notice in result.notices:
        print(notice)
    kept = ", ".join(result.final.names)
    print(f"surviving parameters: {kept}")
    print(f"reduced template written to {result.reduced_path}")
    return EXIT_OK


def _cmd_execute(args: argparse.Namespace) -> int:
    cfg = _config(args)
    if cfg.classes is not None or cfg.graph is not None:
        print("extract runs implicitly before generation")
    result = run_execute(cfg)
    for row in result.stage_rows:
        print(f"stage {row.label}: {row.regressions:,} regressions")
    print(f"array rows: {len(result.array.rows)}")
    overall = result.coverage.overall_percentage
    print(f"configuration coverage: {overall:.1f}%")
    for name, path in sorted(result.artifacts.items()):
        print(f"  {name}: {path}")
    if overall < 100.0 or result.coverage.invalid_rows:
        print("coverage closure not reached", file=sys.stderr)
        return EXIT_COVERAGE
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    result = run_validate(_config(args), Path(args.array))
    if result.hash_mismatch:
        print("warning: model hash mismatch (continuing due to --force)", file=sys.stderr)
    verdict = result.verdict
    print(
        json.dumps(
            {
                "covered": verdict.covered,
                "missing_tuples": [
                    {"parameters": list(combo), "values": list(values)}
                    for combo, values in verdict.missing_tuples
                ],
                "invalid_rows": list(verdict.invalid_rows),
            },
            indent=2,
        )
    )
    return EXIT_OK if verdict.covered else EXIT_COVERAGE


def _cmd_measure(args: argparse.Namespace) -> int:
    result = run_measure(_config(args), Path(args.runs))
    if result.hash_mismatch:
        print("warning: model hash mismatch (continuing due to --force)", file=sys.stderr)
    report = result.report
    print(
        json.dumps(
            {
                "overall_percentage": round(report.overall_percentage, 4),
                "components": [
                    {
                        "name": c.name,
                        "kind": c.kind,
                        "hits": c.hits,
                        "universe": c.universe,
                        "percentage": round(c.percentage, 4),
                    }
                    for c in report.components
                ],
                "invalid_rows": list(report.invalid_rows),
            },
            indent=2,
        )
    )
    return EXIT_OK if report.overall_percentage == 100.0 and not report.invalid_rows else EXIT_COVERAGE


_COMMANDS = {
    "prepare": _cmd_prepare,
    "extract": _cmd_extract,
    "execute": _cmd_execute,
    "validate": _cmd_validate,
    "measure": _cmd_measure,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ParseError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USER_ERROR
    except InternalConsistencyError as exc:
        print(f"internal consistency error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER_ERROR
    except CovplanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER_ERROR


if __name__ == "__main__":
    sys.exit(main())
