"""Input loading and schema validation for sweep output files.

The plotting side is deliberately decoupled from the simulator: everything
arrives through two documented files, `cells.csv` (one row per sweep cell)
and `runs.jsonl` (one JSON record per run).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path


class SchemaError(ValueError):
    """Input file does not match the expected sweep-output schema."""


CELL_KEY_COLUMNS = ("c_mag", "v_nor", "reported")
ACF_COLUMNS = tuple(f"mean_acf_sq_{k}" for k in range(1, 6))
RUN_FIELDS = ("c_mag", "v_nor", "run", "collapsed", "collapse_time",
              "sampling_interval", "prices")


@dataclass
class CellTable:
    c_mags: list[int]            # sorted row axis
    v_nors: list[float]          # sorted column axis
    rows: list[dict]             # raw parsed rows

    def grid(self, metric: str):
        """(values, mask) arrays shaped (len(c_mags), len(v_nors)); mask is
        True where the cell is unreported or the metric is missing."""
        import numpy as np

        values = np.zeros((len(self.c_mags), len(self.v_nors)))
        mask = np.ones_like(values, dtype=bool)
        index = {(r["c_mag"], r["v_nor"]): r for r in self.rows}
        for i, c in enumerate(self.c_mags):
            for j, v in enumerate(self.v_nors):
                row = index.get((c, v))
                if row is None or not row["reported"]:
                    continue
                raw = row.get(metric, "")
                if raw in ("", None):
                    continue
                values[i, j] = float(raw)
                mask[i, j] = False
        return values, mask


def load_cells(path: str | Path, required: tuple[str, ...] = ()) -> CellTable:
    """Parse cells.csv (or stylized.csv) and check the needed columns."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in (*CELL_KEY_COLUMNS[:2], *required):
            if column not in header:
                raise SchemaError(
                    f"{path.name}: missing required column: {column}")
        rows = []
        for raw in reader:
            row = dict(raw)
            row["c_mag"] = int(raw["c_mag"])
            row["v_nor"] = float(raw["v_nor"])
            reported = raw.get("reported", "true")
            row["reported"] = reported.strip().lower() != "false"
            rows.append(row)
    if not rows:
        raise SchemaError(f"{path.name}: no data rows")
    return CellTable(sorted({r["c_mag"] for r in rows}),
                     sorted({r["v_nor"] for r in rows}), rows)


def load_runs(path: str | Path) -> list[dict]:
    """Parse runs.jsonl, validating per-record fields."""
    path = Path(path)
    records = []
    with open(path) as fh:
        for n, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            record = json.loads(line)
            for field in RUN_FIELDS:
                if field not in record:
                    raise SchemaError(
                        f"{path.name}:{n}: missing required column: {field}")
            records.append(record)
    if not records:
        raise SchemaError(f"{path.name}: no run records")
    return records
