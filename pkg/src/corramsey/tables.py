"""Row-oriented result tables and their CSV/JSON serializations."""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import SCHEMA_VERSION


@dataclass
class Table:
    columns: list
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, row: dict) -> None:
        self.rows.append([row.get(c) for c in self.columns])

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def records(self) -> list:
        return [dict(zip(self.columns, r)) for r in self.rows]

    def __len__(self):
        return len(self.rows)


def add_sentinel_columns(table: Table, name: str) -> None:
    """Append ``<name>_rendered`` and ``<name>_sentinel`` for a column that may hold +/-inf.

    Infinite cells render as the column's max finite value + 1 (or min - 1
    for -inf) so exported grids stay plottable.
    """
    values = np.array(table.column(name), dtype=float)
    finite = values[np.isfinite(values)]
    hi = finite.max() + 1 if finite.size else 1.0
    lo = finite.min() - 1 if finite.size else -1.0
    table.columns += [f"{name}_rendered", f"{name}_sentinel"]
    for row, v in zip(table.rows, values):
        flagged = not math.isfinite(v)
        row += [hi if v > 0 and flagged else lo if flagged else v, flagged]


def parallel_map(fn, items, threads: int = 1) -> list:
    """Ordered map; results never depend on ``threads``."""
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(value)


def _json_cell(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else format_cell(v)
    return value


def _json_meta(value):
    if isinstance(value, dict):
        return {k: _json_meta(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_meta(v) for v in value]
    return _json_cell(value)


def render_csv(table: Table, config: dict) -> str:
    """Comment lines with schema version, config and metadata, then header and rows."""
    lines = [f"# schema_version={SCHEMA_VERSION}",
             "# config=" + json.dumps(config, sort_keys=True, allow_nan=False)]
    for key in sorted(table.meta):
        lines.append(f"# {key}=" + json.dumps(_json_meta(table.meta[key]), sort_keys=True, allow_nan=False))
    lines.append(",".join(table.columns))
    for row in table.rows:
        lines.append(",".join(format_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def render_json(table: Table, config: dict) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "config": config,
           "meta": _json_meta(table.meta), "columns": list(table.columns),
           "rows": [{c: _json_cell(v) for c, v in zip(table.columns, r)} for r in table.rows]}
    return json.dumps(doc, indent=1, sort_keys=False, allow_nan=False) + "\n"


def render(table: Table, config: dict, fmt: str) -> str:
    return render_json(table, config) if fmt == "json" else render_csv(table, config)
