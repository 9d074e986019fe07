"""Tuple enumeration, greedy covering-array generation, and array validation.

Enumeration semantics: a value tuple belongs to the universe only if it
extends to at least one fully valid configuration.  That is decided by brute
force over all complete configurations while ``exhaustive_count`` stays at or
below ``BRUTE_FORCE_LIMIT``; above the limit only the constraints whose
referenced parameters all lie inside the tuple's parameter combination are
applied (constraint-local filtering).

Generation is one-row-at-a-time greedy: every iteration samples a pool of
random valid rows, each seeded with a still-uncovered tuple, keeps the row
covering the most uncovered tuples, and breaks ties by the lexicographically
smallest row (in domain-index order).  Rows are sampled by assigning
parameters in descending-cardinality order with forward checking; a dead end
backtracks within a fixed budget, then the row restarts with fresh draws.
All randomness flows from the seed in GenerationConfig, so identical inputs
produce byte-identical arrays.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    CovplanError,
    InternalConsistencyError,
    ModelError,
    PartialArrayError,
    StaleArtifactError,
    UnsatisfiableModelError,
)
from .model import (
    And,
    CompareParams,
    CompareValue,
    CoveringArray,
    Expr,
    IfThen,
    Not,
    Or,
    ParameterModel,
    Value,
    compile_predicate,
    constraint_to_text,
    exhaustive_count,
    in_domain,
    is_valid,
    model_hash,
    referenced_parameters,
)

BRUTE_FORCE_LIMIT = 10**6
_COMBO_GRID_LIMIT = 4 * 10**6
_BACKTRACK_BUDGET = 1000
_MAX_RESTARTS = 16
_EXHAUSTIVE_NODE_CAP = 500_000


@dataclass(frozen=True)
class GenerationConfig:
    """Knobs of the greedy generator; defaults follow the artifact contract."""

    order_t: int = 2
    seed: int = 0
    candidate_pool: int = 50
    max_rows: int | None = None

    def __post_init__(self) -> None:
        if self.order_t < 1:
            raise ModelError("order_t must be >= 1")
        if self.candidate_pool < 1:
            raise ModelError("candidate_pool must be >= 1")


@dataclass(frozen=True)
class TupleUniverse:
    """All valid t-way value tuples, grouped by parameter combination.

    ``tuples_by_combo`` maps a name combination (declaration order) to its
    tuples, each list ordered deterministically by domain indices.  For t=2
    this is exactly the model's value-pair set.
    """

    order_t: int
    param_names: tuple[str, ...]
    tuples_by_combo: dict[tuple[str, ...], tuple[tuple[Value, ...], ...]]

    @property
    def combos(self) -> tuple[tuple[str, ...], ...]:
        return tuple(self.tuples_by_combo)

    @property
    def counts(self) -> dict[tuple[str, ...], int]:
        return {c: len(ts) for c, ts in self.tuples_by_combo.items()}

    @property
    def total_count(self) -> int:
        return sum(len(ts) for ts in self.tuples_by_combo.values())

    @cached_property
    def sets_by_combo(self) -> dict[tuple[str, ...], frozenset[tuple[Value, ...]]]:
        return {c: frozenset(ts) for c, ts in self.tuples_by_combo.items()}


ValuePairSet = TupleUniverse


@dataclass(frozen=True)
class ValidationVerdict:
    covered: bool
    missing_tuples: tuple[tuple[tuple[str, ...], tuple[Value, ...]], ...]
    invalid_rows: tuple[int, ...]


# ---------------------------------------------------------------------------
# Bulk constraint evaluation over numpy columns
# ---------------------------------------------------------------------------


def _value_columns(
    model: ParameterModel, index_cols: dict[str, np.ndarray]
) -> dict[str, np.ndarray]:
    """Integer parameters map to value columns, symbolic ones stay in index space."""
    cols: dict[str, np.ndarray] = {}
    for p in model.parameters:
        if p.is_integer:
            cols[p.name] = np.asarray(p.domain, dtype=np.int64)[index_cols[p.name]]
        else:
            cols[p.name] = index_cols[p.name]
    return cols


def _bulk_eval(
    expr: Expr, model: ParameterModel, cols: dict[str, np.ndarray]
) -> np.ndarray:
    if isinstance(expr, CompareValue):
        p = model.parameter(expr.param)
        col = cols[expr.param]
        if p.is_integer:
            rhs: int = expr.value  # type: ignore[assignment]
        else:
            rhs = p.domain.index(expr.value) if expr.value in p.domain else -1
        if expr.op == "=":
            return col == rhs
        if expr.op == "<>":
            return col != rhs
        if expr.op == "<":
            return col < rhs
        if expr.op == "<=":
            return col <= rhs
        if expr.op == ">":
            return col > rhs
        return col >= rhs
    if isinstance(expr, CompareParams):
        a, b = cols[expr.left], cols[expr.right]
        if expr.op == "=":
            return a == b
        if expr.op == "<>":
            return a != b
        if expr.op == "<":
            return a < b
        if expr.op == "<=":
            return a <= b
        if expr.op == ">":
            return a > b
        return a >= b
    if isinstance(expr, And):
        out = _bulk_eval(expr.terms[0], model, cols)
        for t in expr.terms[1:]:
            out = out & _bulk_eval(t, model, cols)
        return out
    if isinstance(expr, Or):
        out = _bulk_eval(expr.terms[0], model, cols)
        for t in expr.terms[1:]:
            out = out | _bulk_eval(t, model, cols)
        return out
    if isinstance(expr, Not):
        return ~_bulk_eval(expr.term, model, cols)
    if isinstance(expr, IfThen):
        cond = _bulk_eval(expr.cond, model, cols)
        then = _bulk_eval(expr.then, model, cols)
        if expr.orelse is None:
            return ~cond | then
        orelse = _bulk_eval(expr.orelse, model, cols)
        return (cond & then) | (~cond & orelse)
    raise ModelError(f"unknown expression node {type(expr).__name__}")


def _index_grid(cards: tuple[int, ...]) -> list[np.ndarray]:
    total = 1
    for c in cards:
        total *= c
    coords = np.unravel_index(np.arange(total, dtype=np.int64), cards)
    return [c.astype(np.int64) for c in coords]


def _valid_index_columns(model: ParameterModel) -> list[np.ndarray]:
    """Index columns of all valid complete configurations (brute force)."""
    cards = tuple(p.cardinality for p in model.parameters)
    grid = _index_grid(cards)
    if not model.constraints:
        return grid
    index_cols = {p.name: grid[i] for i, p in enumerate(model.parameters)}
    cols = _value_columns(model, index_cols)
    mask = np.ones(len(grid[0]), dtype=bool)
    for c in model.constraints:
        mask &= _bulk_eval(c, model, cols)
    return [g[mask] for g in grid]


def count_valid(model: ParameterModel) -> int:
    """Number of valid complete configurations (brute force; small models only)."""
    if exhaustive_count(model) > BRUTE_FORCE_LIMIT:
        raise CovplanError("model too large for brute-force valid-configuration count")
    return int(len(_valid_index_columns(model)[0]))


def _unique_tuples(
    combo_idx: tuple[int, ...],
    columns: list[np.ndarray],
    model: ParameterModel,
) -> tuple[tuple[Value, ...], ...]:
    """Distinct projections of the given columns onto a parameter combination."""
    params = model.parameters
    enc = np.zeros(len(columns[0]), dtype=np.int64)
    for i in combo_idx:
        enc = enc * params[i].cardinality + columns[i]
    uniq = np.unique(enc)
    out_indices: list[np.ndarray] = []
    for i in reversed(combo_idx):
        out_indices.append(uniq % params[i].cardinality)
        uniq = uniq // params[i].cardinality
    out_indices.reverse()
    tuples = []
    for row in zip(*(ix.tolist() for ix in out_indices)):
        tuples.append(tuple(params[i].domain[v] for i, v in zip(combo_idx, row)))
    return tuple(tuples)


def enumerate_tuples(model: ParameterModel, t: int) -> TupleUniverse:
    """Enumerate every valid t-way tuple of the model.

    Exact (brute force) at or below BRUTE_FORCE_LIMIT complete configurations,
    constraint-local filtering above it.
    """
    n = len(model.parameters)
    if not 1 <= t <= n:
        raise ModelError(f"tuple order {t} out of range 1..{n}")
    combos = list(itertools.combinations(range(n), t))
    result: dict[tuple[str, ...], tuple[tuple[Value, ...], ...]] = {}

    if exhaustive_count(model) <= BRUTE_FORCE_LIMIT:
        columns = _valid_index_columns(model)
        empty = len(columns[0]) == 0
        for combo_idx in combos:
            names = tuple(model.parameters[i].name for i in combo_idx)
            result[names] = () if empty else _unique_tuples(combo_idx, columns, model)
        return TupleUniverse(t, model.names, result)

    for combo_idx in combos:
        names = tuple(model.parameters[i].name for i in combo_idx)
        name_set = set(names)
        local = [c for c in model.constraints if referenced_parameters(c) <= name_set]
        sub = ParameterModel(parameters=tuple(model.parameters[i] for i in combo_idx))
        total = exhaustive_count(sub)
        if total > _COMBO_GRID_LIMIT:
            raise CovplanError(
                f"tuple universe for {names} is too large to enumerate "
                f"({total} candidate tuples); reduce the domains first"
            )
        grid = _index_grid(tuple(p.cardinality for p in sub.parameters))
        if local:
            index_cols = {p.name: grid[k] for k, p in enumerate(sub.parameters)}
            cols = _value_columns(sub, index_cols)
            mask = np.ones(total, dtype=bool)
            for c in local:
                mask &= _bulk_eval(c, sub, cols)
            grid = [g[mask] for g in grid]
        result[names] = _unique_tuples(tuple(range(t)), grid, sub)
    return TupleUniverse(t, model.names, result)


def lower_bound(model: ParameterModel, t: int) -> int:
    """Largest per-combination valid tuple count: a floor on array rows."""
    counts = enumerate_tuples(model, t).counts
    return max(counts.values()) if counts else 0


# ---------------------------------------------------------------------------
# Row sampling: descending-cardinality assignment with forward checking
# ---------------------------------------------------------------------------


class _BudgetExceeded(Exception):
    pass


class _RowSampler:
    """Samples valid rows (in domain-index space) for one model."""

    def __init__(self, model: ParameterModel):
        self.model = model
        self.params = model.parameters
        self.n = len(self.params)
        self.predicates = [
            (
                compile_predicate(c),
                frozenset(model.index(p) for p in referenced_parameters(c)),
            )
            for c in model.constraints
        ]
        self.order = sorted(
            range(self.n), key=lambda i: (-self.params[i].cardinality, i)
        )
        self.touching: list[list[int]] = [[] for _ in range(self.n)]
        self.neighbors: list[set[int]] = [set() for _ in range(self.n)]
        for ci, (_, refs) in enumerate(self.predicates):
            for i in refs:
                self.touching[i].append(ci)
                self.neighbors[i] |= refs - {i}

    def _admissible(self, assignment: dict[int, int], probe: int, value: int) -> bool:
        """All constraints decidable once probe=value joins the assignment hold."""
        if not self.touching[probe]:
            return True
        cfg = {
            self.params[i].name: self.params[i].domain[v]
            for i, v in assignment.items()
        }
        cfg[self.params[probe].name] = self.params[probe].domain[value]
        decided = set(assignment)
        decided.add(probe)
        for ci in self.touching[probe]:
            pred, refs = self.predicates[ci]
            if refs <= decided and not pred(cfg):
                return False
        return True

    def _search(
        self,
        fixed: dict[int, int],
        shuffle: random.Random | None,
        budget: int | None,
        bias=None,
    ) -> tuple[int, ...] | None:
        """One DFS pass; ``budget`` caps backtracking when set.

        ``bias(assignment, param, value)`` scores candidate values; higher
        scores are tried first, ties in the shuffled order.
        """
        assignment: dict[int, int] = {}
        domains: list[list[int]] = [
            list(range(p.cardinality)) for p in self.params
        ]

        def propagate(just_assigned: int) -> list[tuple[int, list[int]]] | None:
            trail: list[tuple[int, list[int]]] = []
            for q in sorted(self.neighbors[just_assigned]):
                if q in assignment:
                    continue
                kept = [v for v in domains[q] if self._admissible(assignment, q, v)]
                if len(kept) != len(domains[q]):
                    trail.append((q, domains[q]))
                    domains[q] = kept
                if not kept:
                    for qq, old in reversed(trail):
                        domains[qq] = old
                    return None
            return trail

        for i, v in sorted(fixed.items()):
            if v not in domains[i] or not self._admissible(assignment, i, v):
                return None
            assignment[i] = v
            if propagate(i) is None:
                return None

        order = [i for i in self.order if i not in fixed]
        steps = 0
        nodes = 0

        def descend(pos: int) -> bool:
            nonlocal steps, nodes
            if pos == len(order):
                return True
            p = order[pos]
            values = list(domains[p])
            if shuffle is not None:
                shuffle.shuffle(values)
            if bias is not None:
                values.sort(key=lambda v: bias(assignment, p, v), reverse=True)
            for v in values:
                nodes += 1
                if budget is None and nodes > _EXHAUSTIVE_NODE_CAP:
                    raise CovplanError(
                        "row completion search exceeded its node budget"
                    )
                if not self._admissible(assignment, p, v):
                    continue
                assignment[p] = v
                trail = propagate(p)
                if trail is not None:
                    if descend(pos + 1):
                        return True
                    for q, old in reversed(trail):
                        domains[q] = old
                del assignment[p]
                steps += 1
                if budget is not None and steps > budget:
                    raise _BudgetExceeded()
            return False

        try:
            found = descend(0)
        except _BudgetExceeded:
            return None
        if not found:
            return None
        return tuple(assignment[i] for i in range(self.n))

    def sample(
        self, rng: random.Random, fixed: dict[int, int] | None = None
    ) -> tuple[int, ...] | None:
        """A random valid row honoring ``fixed`` index assignments, or None.

        Falls back to a systematic search after repeated budget exhaustion, so
        a None return means the fixed assignment is genuinely unextendable
        (within the node cap).
        """
        fixed = fixed or {}
        for _ in range(_MAX_RESTARTS):
            row = self._search(fixed, rng, _BACKTRACK_BUDGET)
            if row is not None:
                return row
            if not self.predicates:
                break
        return self.complete(fixed)

    def complete(self, fixed: dict[int, int]) -> tuple[int, ...] | None:
        """Deterministic systematic completion; decides extendability exactly."""
        return self._search(fixed, None, None)


def find_valid_configuration(
    model: ParameterModel, seed: int = 0
) -> dict[str, Value] | None:
    """Some valid complete configuration, or None if the model is unsatisfiable."""
    row = _RowSampler(model).sample(random.Random(seed))
    if row is None:
        return None
    return {p.name: p.domain[v] for p, v in zip(model.parameters, row)}


def _minimal_conflict(model: ParameterModel) -> tuple[str, ...]:
    """Deletion-shrunk unsatisfiable constraint subset, rendered as text.

    Falls back to the full constraint list when the model is too large to
    re-check subsets by brute force.
    """
    texts = tuple(constraint_to_text(c) for c in model.constraints)
    if exhaustive_count(model) > BRUTE_FORCE_LIMIT or len(texts) > 12:
        return texts

    def unsat(subset: tuple[Expr, ...]) -> bool:
        sub = ParameterModel(parameters=model.parameters, constraints=subset)
        return count_valid(sub) == 0

    keep = list(model.constraints)
    i = 0
    while i < len(keep):
        trial = tuple(keep[:i] + keep[i + 1 :])
        if unsat(trial):
            keep.pop(i)
        else:
            i += 1
    return tuple(constraint_to_text(c) for c in keep)


# ---------------------------------------------------------------------------
# Greedy generation
# ---------------------------------------------------------------------------


class _UncoveredPool:
    """Uncovered tuples of one combination, supporting seeded random picks."""

    def __init__(self, tuples: tuple[tuple[int, ...], ...]):
        self.live: set[tuple[int, ...]] = set(tuples)
        self.order: list[tuple[int, ...]] = list(tuples)

    def __len__(self) -> int:
        return len(self.live)

    def pick(self, rng: random.Random) -> tuple[int, ...]:
        if len(self.order) > 2 * len(self.live):
            self.order = [t for t in self.order if t in self.live]
        while True:
            t = self.order[rng.randrange(len(self.order))]
            if t in self.live:
                return t

    def discard(self, t: tuple[int, ...]) -> bool:
        if t in self.live:
            self.live.remove(t)
            return True
        return False


def _universe_in_index_space(
    model: ParameterModel, universe: TupleUniverse
) -> dict[tuple[int, ...], tuple[tuple[int, ...], ...]]:
    out: dict[tuple[int, ...], tuple[tuple[int, ...], ...]] = {}
    for names, tuples in universe.tuples_by_combo.items():
        combo = tuple(model.index(n) for n in names)
        doms = [model.parameters[i].domain for i in combo]
        out[combo] = tuple(
            tuple(dom.index(v) for dom, v in zip(doms, t)) for t in tuples
        )
    return out


def generate_array(model: ParameterModel, cfg: GenerationConfig) -> CoveringArray:
    """Greedy covering array reaching 100% coverage of the t-way universe."""
    if find_valid_configuration(model, cfg.seed) is None:
        conflict = _minimal_conflict(model)
        raise UnsatisfiableModelError(
            "model has no valid configuration; conflicting constraints: "
            + "; ".join(conflict),
            conflict,
        )
    universe = enumerate_tuples(model, cfg.order_t)
    sampler = _RowSampler(model)

    pools = {
        combo: _UncoveredPool(ts)
        for combo, ts in _universe_in_index_space(model, universe).items()
    }
    combo_list = list(pools)
    total = sum(len(p) for p in pools.values())
    rng = random.Random(cfg.seed)
    rows: list[tuple[int, ...]] = []

    def new_coverage(row: tuple[int, ...]) -> int:
        return sum(
            tuple(row[i] for i in combo) in pools[combo].live for combo in combo_list
        )

    def forced_row() -> tuple[int, ...]:
        combo = next(c for c in combo_list if len(pools[c]) > 0)
        target = min(pools[combo].live)
        row = sampler.complete(dict(zip(combo, target)))
        if row is None:
            raise InternalConsistencyError(
                f"tuple {target} of combination {combo} is in the enumerated "
                "universe but cannot be extended to a valid configuration"
            )
        return row

    while total > 0:
        if cfg.max_rows is not None and len(rows) >= cfg.max_rows:
            raise PartialArrayError(
                f"row cap {cfg.max_rows} reached with {total} tuples uncovered"
            )
        candidates: list[tuple[int, tuple[int, ...]]] = []
        for _ in range(cfg.candidate_pool):
            pick = rng.randrange(total)
            running = 0
            chosen = combo_list[-1]
            for combo in combo_list:
                running += len(pools[combo])
                if pick < running:
                    chosen = combo
                    break
            seed_tuple = pools[chosen].pick(rng)
            row = sampler.sample(rng, dict(zip(chosen, seed_tuple)))
            if row is not None:
                candidates.append((new_coverage(row), row))
        if not candidates:
            candidates.append((0, forced_row()))
        gain, best = min(candidates, key=lambda cr: (-cr[0], cr[1]))
        if gain == 0:
            best = forced_row()
        rows.append(best)
        for combo in combo_list:
            if pools[combo].discard(tuple(best[i] for i in combo)):
                total -= 1

    value_rows = tuple(
        tuple(p.domain[v] for p, v in zip(model.parameters, row)) for row in rows
    )
    return CoveringArray(
        order_t=cfg.order_t,
        param_names=model.names,
        rows=value_rows,
        model_hash=model_hash(model),
    )


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate_array(
    model: ParameterModel, array: CoveringArray, *, check_hash: bool = True
) -> ValidationVerdict:
    """Check an array against an independently enumerated tuple universe.

    Coverage is recomputed from the rows; nothing is taken over from the
    generator's bookkeeping.  Rows that violate constraints (or leave their
    domains) are reported and never counted as covering anything.
    """
    if array.order_t > len(model.parameters):
        raise ModelError("array order exceeds the model's parameter count")
    if check_hash and array.model_hash != model_hash(model):
        raise StaleArtifactError(
            "array was generated from a different model "
            f"(array hash {array.model_hash[:12]}..., "
            f"model hash {model_hash(model)[:12]}...)"
        )
    if set(array.param_names) != set(model.names):
        raise StaleArtifactError("array parameter names do not match the model")

    universe = enumerate_tuples(model, array.order_t)
    invalid: list[int] = []
    valid_configs: list[dict[str, Value]] = []
    for idx, cfg in enumerate(array.configurations()):
        if not in_domain(model, cfg) or not is_valid(model, cfg):
            invalid.append(idx)
        else:
            valid_configs.append(cfg)

    seen: dict[tuple[str, ...], set[tuple[Value, ...]]] = {
        combo: set() for combo in universe.combos
    }
    for cfg in valid_configs:
        for combo in universe.combos:
            seen[combo].add(tuple(cfg[name] for name in combo))

    missing: list[tuple[tuple[str, ...], tuple[Value, ...]]] = []
    for combo, tuples in universe.tuples_by_combo.items():
        got = seen[combo]
        missing.extend((combo, t) for t in tuples if t not in got)

    return ValidationVerdict(
        covered=not missing and not invalid,
        missing_tuples=tuple(missing),
        invalid_rows=tuple(invalid),
    )
