"""CSV persistence of covering arrays and executed-run lists.

The array file is plain CSV: a header row of parameter names, one
configuration per line.  A ``.meta`` companion carries ``order_t``, ``seed``
and ``model_hash`` so consumers can detect stale artifacts.
"""

from __future__ import annotations

import csv
import io

from .errors import StaleArtifactError
from .model import CoveringArray, ParameterModel, Value

__all__ = [
    "array_to_csv",
    "array_meta_text",
    "read_array",
    "read_runs",
]


def array_to_csv(array: CoveringArray) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(array.param_names)
    for row in array.rows:
        writer.writerow(row)
    return buf.getvalue()


def array_meta_text(array: CoveringArray, seed: int | None) -> str:
    lines = [f"order_t: {array.order_t}"]
    if seed is not None:
        lines.append(f"seed: {seed}")
    lines.append(f"model_hash: {array.model_hash}")
    return "\n".join(lines) + "\n"


def _parse_meta(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise StaleArtifactError(f"malformed meta line: {line!r}")
        key, value = line.split(":", 1)
        out[key.strip()] = value.strip()
    return out


def _coerce(model: ParameterModel, name: str, token: str) -> Value:
    if model.parameter(name).is_integer:
        try:
            return int(token)
        except ValueError:
            return token  # reported later as an out-of-domain value
    return token


def read_runs(text: str, model: ParameterModel) -> list[dict[str, Value]]:
    """Parse a runs/array CSV against the model; header must match its names."""
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row]
    if not rows:
        raise StaleArtifactError("runs file is empty")
    header = tuple(h.strip() for h in rows[0])
    unknown = set(header) - set(model.names)
    if unknown:
        raise StaleArtifactError(
            f"runs file names unknown parameter(s): {sorted(unknown)}"
        )
    missing = set(model.names) - set(header)
    if missing:
        raise StaleArtifactError(
            f"runs file is missing parameter(s): {sorted(missing)}"
        )
    out: list[dict[str, Value]] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise StaleArtifactError(f"line {lineno}: expected {len(header)} values")
        out.append(
            {name: _coerce(model, name, tok.strip()) for name, tok in zip(header, row)}
        )
    return out


def read_array(
    csv_text: str, meta_text: str | None, model: ParameterModel
) -> tuple[CoveringArray, int | None]:
    """Reconstruct a CoveringArray (and its recorded seed) from disk artifacts.

    Without a meta file the array is assumed to target t=2 and is stamped with
    the current model hash (the caller has nothing to compare against).
    """
    configs = read_runs(csv_text, model)
    order_t = 2
    seed: int | None = None
    recorded_hash: str | None = None
    if meta_text is not None:
        meta = _parse_meta(meta_text)
        if "order_t" in meta:
            order_t = int(meta["order_t"])
        if "seed" in meta:
            seed = int(meta["seed"])
        recorded_hash = meta.get("model_hash")
    from .model import model_hash as _hash

    array = CoveringArray(
        order_t=order_t,
        param_names=model.names,
        rows=tuple(tuple(cfg[name] for name in model.names) for cfg in configs),
        model_hash=recorded_hash if recorded_hash is not None else _hash(model),
    )
    return array, seed
