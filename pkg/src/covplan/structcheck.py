"""Design-connectivity analysis: find parameters safe to verify at block level.

The graph file (``.dg``) is line oriented:

    block <name>
    signal <block>.<sig>
    edge <block>.<sig> -> <block>.<sig>
    output <block>.<sig>
    param <Param> uses <block> affects <sig>[,<sig>...]
    # comment

A parameter is eligible for block-level verification when exactly one block
uses it and the fan-out cone of its affected signals never enters another
block's logic (every cone signal is owned by the using block or is a
top-level output).  Eligible parameters can then be dropped from the
generation model; a proof obligation for the owning block is recorded so a
formal tool can discharge the block for the parameter's full value range.
Pruning refuses to touch parameters still referenced by constraints.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dsl import ParseDiagnostic, ParseError, SourceSpan
from .errors import ConstraintEntanglementError, ModelError
from .model import (
    ParameterModel,
    constraint_to_text,
    referenced_parameters,
)

__all__ = [
    "DesignGraph",
    "ParamUsage",
    "EligibilityVerdict",
    "PruneLogEntry",
    "load_graph",
    "cone_of_influence",
    "check_parameter",
    "prune_model",
]

ELIGIBLE = "single-block-and-output-contained"
MULTI_BLOCK = "used-by-multiple-blocks"
FEEDS_INTERNAL = "feeds-internal-logic"
UNUSED = "unused"


@dataclass(frozen=True)
class ParamUsage:
    parameter: str
    block: str
    affected: tuple[str, ...]  # qualified signal names


@dataclass(frozen=True)
class DesignGraph:
    blocks: tuple[str, ...]
    signals: dict[str, str]  # qualified name -> owning block
    edges: tuple[tuple[str, str], ...]
    top_outputs: frozenset[str]
    param_usage: tuple[ParamUsage, ...]

    def fanout(self) -> dict[str, list[str]]:
        adj: dict[str, list[str]] = {s: [] for s in self.signals}
        for src, dst in self.edges:
            adj[src].append(dst)
        return adj

    def fanin(self) -> dict[str, list[str]]:
        adj: dict[str, list[str]] = {s: [] for s in self.signals}
        for src, dst in self.edges:
            adj[dst].append(src)
        return adj

    def usages_of(self, param: str) -> tuple[ParamUsage, ...]:
        return tuple(u for u in self.param_usage if u.parameter == param)


@dataclass(frozen=True)
class EligibilityVerdict:
    """Outcome of the block-level suitability check for one parameter.

    For eligible parameters the witness starts with the owning block followed
    by the top-level outputs the cone reaches; for rejections it is the block
    list or the offending signal path.
    """

    parameter: str
    eligible: bool
    reason: str
    witness: tuple[str, ...]


@dataclass(frozen=True)
class PruneLogEntry:
    parameter: str
    block: str
    domain: tuple
    reason: str


def load_graph(text: str, source: str = "<graph>") -> DesignGraph:
    """Parse and invariant-check a design-connectivity document."""
    diags: list[ParseDiagnostic] = []

    def error(lineno: int, message: str) -> None:
        diags.append(ParseDiagnostic("error", SourceSpan(source, lineno, 1), message))

    blocks: list[str] = []
    signals: dict[str, str] = {}
    edges: list[tuple[str, str]] = []
    edge_lines: list[int] = []
    outputs: list[str] = []
    output_lines: list[int] = []
    usages: list[ParamUsage] = []
    usage_lines: list[int] = []

    for lineno, raw in enumerate(text.replace("\r\n", "\n").split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        kind = fields[0]
        if kind == "block" and len(fields) == 2:
            if fields[1] in blocks:
                error(lineno, f"duplicate block name {fields[1]!r}")
            else:
                blocks.append(fields[1])
        elif kind == "signal" and len(fields) == 2 and "." in fields[1]:
            qual = fields[1]
            owner = qual.split(".", 1)[0]
            if qual in signals:
                error(lineno, f"duplicate signal name {qual!r}")
            else:
                signals[qual] = owner
        elif kind == "edge" and len(fields) == 4 and fields[2] == "->":
            edges.append((fields[1], fields[3]))
            edge_lines.append(lineno)
        elif kind == "output" and len(fields) == 2:
            outputs.append(fields[1])
            output_lines.append(lineno)
        elif kind == "param" and len(fields) >= 5 and fields[2] == "uses" and fields[4] == "affects":
            sigs = tuple(s.strip() for s in " ".join(fields[5:]).split(",") if s.strip())
            if not sigs:
                error(lineno, f"param {fields[1]!r}: empty affected-signal list")
            else:
                usages.append(ParamUsage(fields[1], fields[3], sigs))
                usage_lines.append(lineno)
        else:
            error(lineno, f"unrecognized graph line: {line!r}")

    if not blocks and not diags:
        diags.append(
            ParseDiagnostic("error", SourceSpan(source, 1, 1), "no blocks declared")
        )
    for qual, owner in signals.items():
        if owner not in blocks:
            diags.append(
                ParseDiagnostic(
                    "error",
                    SourceSpan(source, 1, 1),
                    f"signal {qual!r} belongs to undeclared block {owner!r}",
                )
            )
    for (src, dst), lineno in zip(edges, edge_lines):
        for endpoint in (src, dst):
            if endpoint not in signals:
                error(lineno, f"edge endpoint {endpoint!r} is not a declared signal")
    for out, lineno in zip(outputs, output_lines):
        if out not in signals:
            error(lineno, f"output {out!r} is not a declared signal")
    qualified_usages: list[ParamUsage] = []
    for usage, lineno in zip(usages, usage_lines):
        if usage.block not in blocks:
            error(lineno, f"param {usage.parameter!r} uses undeclared block {usage.block!r}")
            continue
        qualified = tuple(
            s if "." in s else f"{usage.block}.{s}" for s in usage.affected
        )
        ok = True
        for q in qualified:
            if q not in signals:
                error(lineno, f"affected signal {q!r} is not declared")
                ok = False
            elif signals[q] != usage.block:
                error(
                    lineno,
                    f"affected signal {q!r} does not belong to using block "
                    f"{usage.block!r}",
                )
                ok = False
        if ok:
            qualified_usages.append(
                ParamUsage(usage.parameter, usage.block, qualified)
            )
    if blocks and not outputs and not diags:
        diags.append(
            ParseDiagnostic(
                "error", SourceSpan(source, 1, 1), "no top-level outputs declared"
            )
        )
    if diags:
        raise ParseError(diags)
    return DesignGraph(
        blocks=tuple(blocks),
        signals=signals,
        edges=tuple(edges),
        top_outputs=frozenset(outputs),
        param_usage=tuple(qualified_usages),
    )


def cone_of_influence(
    graph: DesignGraph, seeds: frozenset[str] | set[str], direction: str = "fan-out"
) -> frozenset[str]:
    """Transitive closure along edges in the given direction, seeds included."""
    if direction not in ("fan-out", "fan-in"):
        raise ModelError(f"unknown cone direction {direction!r}")
    unknown = set(seeds) - set(graph.signals)
    if unknown:
        raise ModelError(f"cone seeds are not declared signals: {sorted(unknown)}")
    adj = graph.fanout() if direction == "fan-out" else graph.fanin()
    visited = set(seeds)
    frontier = list(seeds)
    while frontier:
        sig = frontier.pop()
        for nxt in adj[sig]:
            if nxt not in visited:
                visited.add(nxt)
                frontier.append(nxt)
    return frozenset(visited)


def _witness_path(
    graph: DesignGraph, seeds: tuple[str, ...], target: str
) -> tuple[str, ...]:
    """Shortest edge path from any seed to the target signal."""
    adj = graph.fanout()
    parents: dict[str, str | None] = {s: None for s in seeds}
    frontier = list(seeds)
    while frontier:
        sig = frontier.pop(0)
        if sig == target:
            path = [sig]
            while parents[sig] is not None:
                sig = parents[sig]  # type: ignore[assignment]
                path.append(sig)
            return tuple(reversed(path))
        for nxt in adj[sig]:
            if nxt not in parents:
                parents[nxt] = sig
                frontier.append(nxt)
    return (target,)  # pragma: no cover - target is reachable by construction


def check_parameter(graph: DesignGraph, param: str) -> EligibilityVerdict:
    """Decide block-level eligibility of one parameter.

    Eligible iff exactly one block uses it and the fan-out cone of the
    affected signals stays inside that block except for top-level outputs.
    """
    usages = graph.usages_of(param)
    if not usages:
        return EligibilityVerdict(param, False, UNUSED, ())
    blocks_using = []
    for u in usages:
        if u.block not in blocks_using:
            blocks_using.append(u.block)
    if len(blocks_using) > 1:
        return EligibilityVerdict(param, False, MULTI_BLOCK, tuple(blocks_using))

    block = blocks_using[0]
    seeds: tuple[str, ...] = tuple(
        dict.fromkeys(s for u in usages for s in u.affected)
    )
    cone = cone_of_influence(graph, set(seeds), "fan-out")
    for sig in sorted(cone):
        if graph.signals[sig] != block and sig not in graph.top_outputs:
            return EligibilityVerdict(
                param, False, FEEDS_INTERNAL, _witness_path(graph, seeds, sig)
            )
    outputs_reached = tuple(sorted(cone & graph.top_outputs))
    return EligibilityVerdict(param, True, ELIGIBLE, (block, *outputs_reached))


def prune_model(
    model: ParameterModel, verdicts: tuple[EligibilityVerdict, ...] | list
) -> tuple[ParameterModel, tuple[PruneLogEntry, ...]]:
    """Remove eligible parameters from the model, refusing entangled constraints.

    Constraints must never be silently weakened: if any constraint references
    a parameter slated for removal, pruning aborts and the caller must either
    keep the parameter or drop the constraint explicitly.
    """
    known = set(model.names)
    for v in verdicts:
        if v.parameter not in known:
            raise ModelError(f"verdict for unknown parameter {v.parameter!r}")
    eligible = {v.parameter: v for v in verdicts if v.eligible}
    if not eligible:
        return model, ()

    for c in model.constraints:
        entangled = sorted(referenced_parameters(c) & set(eligible))
        if entangled:
            raise ConstraintEntanglementError(
                f"cannot prune {', '.join(repr(p) for p in entangled)}: still "
                f"referenced by constraint '{constraint_to_text(c)}'; keep the "
                "parameter or drop the constraint explicitly"
            )

    log = []
    for p in model.parameters:
        if p.name in eligible:
            v = eligible[p.name]
            block = v.witness[0] if v.witness else ""
            log.append(PruneLogEntry(p.name, block, p.domain, v.reason))
    pruned = ParameterModel(
        parameters=tuple(p for p in model.parameters if p.name not in eligible),
        constraints=model.constraints,
        classes=tuple(c for c in model.classes if c.parameter not in eligible),
        cross_suppressions=tuple(
            (a, b)
            for a, b in model.cross_suppressions
            if a not in eligible and b not in eligible
        ),
    )
    return pruned, tuple(log)
