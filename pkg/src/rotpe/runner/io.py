"""CSV, metadata and snapshot output."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, is_dataclass
from pathlib import Path
from typing import Iterable, Sequence

from ..pe_dynamics import RECORD_COLUMNS, PEState
from ..spectral_core import read_snapshot, write_snapshot

COLUMN_VERSION = 1


def fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = [",".join(columns)]
    for row in rows:
        if len(row) != len(columns):
            raise ValueError("row length does not match the header")
        lines.append(",".join(fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path: str | Path) -> tuple[list[str], list[list[float]]]:
    text = Path(path).read_text().strip().splitlines()
    header = text[0].split(",")
    return header, [[float(v) for v in line.split(",")] for line in text[1:]]


def write_records(path: str | Path, records) -> None:
    write_csv(path, RECORD_COLUMNS, ([getattr(r, c) for c in RECORD_COLUMNS] for r in records))


def write_table(path: str | Path, rows) -> None:
    rows = list(rows)
    if not rows:
        raise ValueError("empty table")
    cols = list(asdict(rows[0]))
    write_csv(path, cols, ([getattr(r, c) for c in cols] for r in rows))


def _jsonable(obj):
    if is_dataclass(obj):
        return _jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return fmt(obj)
    if hasattr(obj, "item"):
        return _jsonable(obj.item())
    return obj


def write_metadata(path: str | Path, meta: dict) -> None:
    Path(path).write_text(json.dumps(_jsonable(meta), indent=2, sort_keys=True) + "\n")


def save_state(directory: str | Path, index: int, state: PEState) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    path = d / f"state_{index:05d}.bin"
    write_snapshot(path, state.velocity(), {"t": state.t, "index": index})
    return path


def load_state(path: str | Path) -> PEState:
    comps, meta = read_snapshot(path)
    return PEState.from_velocity(comps, float(meta.get("t", 0.0)))


def load_states(directory: str | Path) -> list[PEState]:
    paths = sorted(Path(directory).glob("state_*.bin"))
    if not paths:
        raise FileNotFoundError(f"no snapshots in {directory}")
    return [load_state(p) for p in paths]


__all__ = ["COLUMN_VERSION", "fmt", "load_state", "load_states", "read_csv",
           "save_state", "write_csv", "write_metadata", "write_records", "write_table"]
