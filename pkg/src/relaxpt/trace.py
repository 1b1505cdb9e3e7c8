"""Per-iteration convergence records and their CSV/JSON serialization."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Any, Optional

import mpmath

CSV_HEADER = ("k", "energy", "residual", "elapsed_s")


def fmt17(x) -> str:
    """Format a real scalar with 17 significant digits."""
    if isinstance(x, mpmath.mpf):
        return mpmath.nstr(x, 17, min_fixed=-4, max_fixed=0)
    return format(float(x), ".17g")


def fmt_full(x) -> str:
    """Like ``fmt17`` but keeps every working digit of an extended value."""
    if isinstance(x, mpmath.mpf):
        return mpmath.nstr(x, mpmath.mp.dps if mpmath.mp.dps > 17 else 30, min_fixed=-4, max_fixed=0)
    return fmt17(x)


@dataclass
class TraceRecord:
    k: int
    energy: Any
    residual: Any
    elapsed_s: float
    extra: dict = field(default_factory=dict)


class ConvergenceTrace:
    """Append-only stream of iteration records.

    ``keep`` bounds memory for very long runs: when set, only every
    ``keep``-th record plus the last one are retained.
    """

    def __init__(self, keep: Optional[int] = None):
        self.records: list[TraceRecord] = []
        self.keep = keep
        self._last: Optional[TraceRecord] = None

    def append(self, k, energy, residual, elapsed_s, **extra):
        rec = TraceRecord(k, energy, residual, elapsed_s, extra)
        self._last = rec
        if self.keep is None or k % self.keep == 0:
            self.records.append(rec)

    def finalize(self):
        if self._last is not None and (not self.records or self.records[-1] is not self._last):
            self.records.append(self._last)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def energies(self) -> list:
        return [r.energy for r in self.records]

    @property
    def residuals(self) -> list:
        return [r.residual for r in self.records]

    def write_csv(self, path, *, include_time: bool = True):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in self.records:
                w.writerow([r.k, fmt17(r.energy), fmt17(r.residual),
                            fmt17(r.elapsed_s) if include_time else ""])

    def to_json_dict(self, config: Optional[dict] = None, summary: Optional[dict] = None) -> dict:
        rows = []
        for r in self.records:
            row = {"k": r.k, "energy": fmt17(r.energy), "residual": fmt17(r.residual),
                   "elapsed_s": fmt17(r.elapsed_s)}
            for key, val in r.extra.items():
                row[key] = [fmt17(v) for v in val] if isinstance(val, (list, tuple)) else val
            rows.append(row)
        out: dict = {"config": config or {}, "records": rows}
        if summary is not None:
            out["summary"] = summary
        return out

    def write_json(self, path, config: Optional[dict] = None, summary: Optional[dict] = None):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(config, summary), fh, indent=1)


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        return [
            {"k": int(row["k"]), "energy": float(row["energy"]), "residual": float(row["residual"]),
             "elapsed_s": float(row["elapsed_s"]) if row["elapsed_s"] else None}
            for row in rd
        ]
