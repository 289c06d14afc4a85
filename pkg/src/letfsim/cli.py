"""Experiment harness: sweep configuration, Monte Carlo fan-out, table emission.

A sweep crosses initial-cash coefficients with normalized order-quantity
thresholds, runs a fixed number of seeded Monte Carlo replications per cell,
and aggregates them into per-cell summaries.  Output bytes depend only on
(spec, base_seed): per-run seeds are derived from (base_seed, cell, run
index), results are re-sorted before aggregation, and rows are emitted in
(c_mag asc, v_nor asc) order no matter how execution was scheduled.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Sequence

from .engine import ConfigError, RunResult, SimConfig
from .engine import run as run_one
from .rng import run_seed
from .stats import ACF_LAGS, CellSummary, rebalance_metrics, summarize_cell

PARALLELISM_ENV = "LETFSIM_PARALLELISM"
DEFAULT_C_MAGS = tuple(range(10, 101, 10))
DEFAULT_V_NORS = (0.1, 0.2, 0.3, 0.4, 0.5)

CELLS_CSV_HEADER = [
    "c_mag", "v_nor", "v_thr", "runs", "collapse_fraction", "reported",
    "mean_rebalance_count", "mean_total_rebalance_qty", "mean_qty_per_trade",
    "mean_volatility", "mean_excess_kurtosis",
    "mean_acf_sq_1", "mean_acf_sq_2", "mean_acf_sq_3", "mean_acf_sq_4",
    "mean_acf_sq_5",
]
STYLIZED_CSV_HEADER = [
    "c_mag", "v_nor", "v_thr", "mean_excess_kurtosis",
    "mean_acf_sq_1", "mean_acf_sq_2", "mean_acf_sq_3", "mean_acf_sq_4",
    "mean_acf_sq_5",
]

UNREPORTED_MARK = "—"   # em dash, the dashed-cell convention


def default_parallelism() -> int:
    env = os.environ.get(PARALLELISM_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"{PARALLELISM_ENV}: must be an integer, got {env!r}")
        if n >= 1:
            return n
        raise ConfigError(f"{PARALLELISM_ENV}: must be >= 1, got {n}")
    return os.cpu_count() or 1


@dataclass
class SweepSpec:
    base: SimConfig = field(default_factory=SimConfig)
    c_mag_values: list[int] = field(default_factory=lambda: list(DEFAULT_C_MAGS))
    v_nor_values: list[float] = field(default_factory=lambda: list(DEFAULT_V_NORS))
    runs_per_cell: int = 10
    base_seed: int = 1
    parallelism: int = field(default_factory=default_parallelism)

    def validate(self) -> None:
        self.base.validate()
        if not self.c_mag_values:
            raise ConfigError("c_mag_values: must be a non-empty list")
        if not self.v_nor_values:
            raise ConfigError("v_nor_values: must be a non-empty list")
        for c in self.c_mag_values:
            if not isinstance(c, int) or c < 1:
                raise ConfigError(f"c_mag_values: entries must be integers >= 1, got {c!r}")
        for v in self.v_nor_values:
            if not isinstance(v, (int, float)) or v <= 0:
                raise ConfigError(f"v_nor_values: entries must be positive numbers, got {v!r}")
        if not isinstance(self.runs_per_cell, int) or self.runs_per_cell < 1:
            raise ConfigError(f"runs_per_cell: must be an integer >= 1, got {self.runs_per_cell!r}")
        if not isinstance(self.base_seed, int) or self.base_seed < 0:
            raise ConfigError(f"base_seed: must be a non-negative integer, got {self.base_seed!r}")
        if not isinstance(self.parallelism, int) or self.parallelism < 1:
            raise ConfigError(f"parallelism: must be an integer >= 1, got {self.parallelism!r}")
        if self.base.letf_enabled:
            for c in self.c_mag_values:
                for v in self.v_nor_values:
                    try:
                        replace(self.base, c_mag=c, v_nor=v).letf_params()
                    except ValueError as exc:
                        raise ConfigError(f"cell (c_mag={c}, v_nor={v}): {exc}") from exc

    def to_dict(self) -> dict:
        d = asdict(self)
        d["base"] = asdict(self.base)
        return d


_SIM_KEYS = {f.name for f in fields(SimConfig)}
_SWEEP_KEYS = {f.name for f in fields(SweepSpec)} - {"base"}


def parse_config(path: Optional[str], overrides: Optional[dict] = None) -> SweepSpec:
    """Resolve a sweep spec from a flat-key JSON file plus override values.

    Keys may name any SimConfig or sweep-level field; anything else is
    rejected with a diagnostic naming the key.  An empty file (or no file)
    yields the full default parameterization.
    """
    data: dict = {}
    if path is not None:
        with open(path) as fh:
            text = fh.read().strip()
        if text:
            data = json.loads(text)
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path}: expected a JSON object")
    if overrides:
        data.update(overrides)

    sim_kwargs, sweep_kwargs = {}, {}
    for key, value in data.items():
        if key in _SIM_KEYS:
            sim_kwargs[key] = value
        elif key in _SWEEP_KEYS:
            sweep_kwargs[key] = value
        else:
            raise ConfigError(f"unknown config key {key!r}")
    spec = SweepSpec(base=SimConfig(**sim_kwargs), **sweep_kwargs)
    spec.validate()
    return spec


def parse_override(text: str) -> tuple[str, object]:
    """Turn a ``--key=value`` argument into a typed (key, value) pair."""
    if not text.startswith("--") or "=" not in text:
        raise ConfigError(f"expected --key=value, got {text!r}")
    key, _, raw = text[2:].partition("=")
    try:
        value: object = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _execute_job(job: tuple[SimConfig, Optional[str]]):
    config, journal_path = job
    try:
        return "ok", run_one(config, journal_path)
    except Exception as exc:   # contained: reported as a failed run
        return "error", f"{type(exc).__name__}: {exc}"


def _failed_run(config: SimConfig) -> RunResult:
    return RunResult(config, [config.fundamental_price], [],
                     collapsed=True, collapse_time=0, step_count=0)


def run_sweep(spec: SweepSpec, collect_runs: bool = False,
              journal_dir: Optional[Path] = None,
              log=None) -> tuple[list[CellSummary], Optional[list[dict]]]:
    """Execute every (c_mag, v_nor, run) job and aggregate per cell.

    Returns summaries in (c_mag asc, v_nor asc) order and, when
    `collect_runs`, one provenance record per run for runs.jsonl.
    """
    spec.validate()
    c_mags = sorted(set(spec.c_mag_values))
    v_nors = sorted(set(spec.v_nor_values))
    if journal_dir is not None:
        journal_dir.mkdir(parents=True, exist_ok=True)

    jobs: list[tuple[SimConfig, Optional[str]]] = []
    keys: list[tuple[int, float, int]] = []
    for c in c_mags:
        for v in v_nors:
            for k in range(spec.runs_per_cell):
                config = replace(spec.base, c_mag=c, v_nor=v,
                                 seed=run_seed(spec.base_seed, c, v, k))
                jpath = (str(journal_dir / f"events_c{c}_v{v}_r{k}.jsonl")
                         if journal_dir is not None else None)
                jobs.append((config, jpath))
                keys.append((c, v, k))

    outcomes = []
    if spec.parallelism <= 1 or len(jobs) == 1:
        for job, key in zip(jobs, keys):
            outcomes.append(_execute_job(job))
            if log is not None:
                log(key)
    else:
        with ProcessPoolExecutor(max_workers=spec.parallelism) as pool:
            for outcome, key in zip(pool.map(_execute_job, jobs, chunksize=1), keys):
                outcomes.append(outcome)
                if log is not None:
                    log(key)

    results: list[RunResult] = []
    for (status, payload), (config, _), key in zip(outcomes, jobs, keys):
        if status == "ok":
            results.append(payload)
        else:
            print(f"warning: run c_mag={key[0]} v_nor={key[1]} run={key[2]} "
                  f"failed ({payload}); counted as collapsed", file=sys.stderr)
            results.append(_failed_run(config))

    summaries = []
    idx = 0
    for c in c_mags:
        for v in v_nors:
            chunk = results[idx:idx + spec.runs_per_cell]
            idx += spec.runs_per_cell
            v_thr = chunk[0].config.letf_params().v_thr if spec.base.letf_enabled else 0
            summaries.append(summarize_cell(chunk, c, v, v_thr))

    run_records = None
    if collect_runs:
        run_records = []
        for result, key in zip(results, keys):
            count, total, _ = rebalance_metrics(result.rebalance_events)
            run_records.append({
                "c_mag": key[0], "v_nor": key[1], "run": key[2],
                "seed": result.config.seed,
                "sampling_interval": result.config.sampling_interval,
                "collapsed": result.collapsed,
                "collapse_time": result.collapse_time,
                "step_count": result.step_count,
                "rebalance_count": count,
                "total_rebalance_qty": total,
                "prices": result.price_series,
            })
    return summaries, run_records


# -- emission -------------------------------------------------------------

def _metric_cell(summary: CellSummary, value: float) -> str:
    return "" if not summary.reported else str(value)


def _csv_row(s: CellSummary) -> list[str]:
    row = [str(s.c_mag), str(s.v_nor), str(s.v_thr), str(s.runs),
           str(s.collapse_fraction), "true" if s.reported else "false",
           _metric_cell(s, s.mean_rebalance_count),
           _metric_cell(s, s.mean_total_rebalance_qty),
           _metric_cell(s, s.mean_qty_per_trade),
           _metric_cell(s, s.mean_volatility),
           _metric_cell(s, s.mean_excess_kurtosis)]
    row.extend(_metric_cell(s, a) for a in s.mean_acf_sq)
    return row


def _grid_text(summaries: Sequence[CellSummary], title: str,
               value_fn, fmt: str) -> str:
    c_mags = sorted({s.c_mag for s in summaries})
    v_nors = sorted({s.v_nor for s in summaries})
    by_cell = {(s.c_mag, s.v_nor): s for s in summaries}
    width = 12
    lines = [title, ""]
    header = "c_mag".ljust(8) + "".join(f"v_nor={v}".rjust(width) for v in v_nors)
    lines.append(header)
    for c in c_mags:
        cells = []
        for v in v_nors:
            s = by_cell.get((c, v))
            if s is None or not s.reported or math.isnan(value_fn(s)):
                cells.append(UNREPORTED_MARK.rjust(width))
            else:
                cells.append(format(value_fn(s), fmt).rjust(width))
        lines.append(str(c).ljust(8) + "".join(cells))
    return "\n".join(lines) + "\n"


def emit_tables(summaries: Sequence[CellSummary], out_dir: Path,
                runs: Optional[list[dict]] = None) -> list[Path]:
    """Write cells.csv, stylized.csv, the four grid tables, and optionally
    runs.jsonl under `out_dir`; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    path = out_dir / "cells.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CELLS_CSV_HEADER)
        for s in summaries:
            w.writerow(_csv_row(s))
    written.append(path)

    path = out_dir / "stylized.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(STYLIZED_CSV_HEADER)
        for s in summaries:
            row = [str(s.c_mag), str(s.v_nor), str(s.v_thr),
                   _metric_cell(s, s.mean_excess_kurtosis)]
            row.extend(_metric_cell(s, a) for a in s.mean_acf_sq)
            w.writerow(row)
    written.append(path)

    grids = [
        ("table_3.txt", "Mean number of rebalancing trades per run",
         lambda s: s.mean_rebalance_count, ".1f"),
        ("table_4.txt", "Mean total rebalancing order quantity per run",
         lambda s: s.mean_total_rebalance_qty, ".1f"),
        ("table_5.txt", "Mean rebalancing order quantity per trade",
         lambda s: s.mean_qty_per_trade, ".2f"),
        ("table_6.txt", "Mean underlying market volatility (x 1e-3)",
         lambda s: s.mean_volatility * 1e3, ".3f"),
    ]
    for name, title, value_fn, fmt in grids:
        path = out_dir / name
        path.write_text(_grid_text(summaries, title, value_fn, fmt))
        written.append(path)

    if runs is not None:
        path = out_dir / "runs.jsonl"
        with open(path, "w") as fh:
            for rec in runs:
                fh.write(json.dumps(rec, separators=(",", ":")) + "\n")
        written.append(path)
    return written


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="Run a (c_mag x v_nor) rebalancing-threshold sweep and "
                    "emit per-cell tables.",
        epilog="Any SimConfig or sweep field can be overridden with "
               "--KEY=VALUE, e.g. --max_steps=50000 --v_nor_values=[0.1,0.2].")
    parser.add_argument("--config", metavar="FILE",
                        help="JSON file with flat config keys (default: built-in defaults)")
    parser.add_argument("--out", metavar="DIR", required=True,
                        help="output directory for tables")
    parser.add_argument("--paper-scale", action="store_true",
                        help="use 100 runs per cell instead of the desk default")
    parser.add_argument("--journal", action="store_true",
                        help="also emit per-run provenance records (runs.jsonl)")
    parser.add_argument("--event-journal", action="store_true",
                        help="also emit order-book event journals per run "
                             "(large: O(max_steps) lines per run)")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress progress output")
    args, extra = parser.parse_known_args(argv)

    try:
        overrides = dict(parse_override(token) for token in extra)
        spec = parse_config(args.config, overrides)
        if args.paper_scale:
            spec.runs_per_cell = 100
            spec.validate()
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"simulate: error: {exc}", file=sys.stderr)
        return 2

    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        resolved = json.dumps(spec.to_dict(), indent=2)
        (out_dir / "resolved_config.json").write_text(resolved + "\n")
    except OSError as exc:
        print(f"simulate: error: cannot write to {out_dir}: {exc}", file=sys.stderr)
        return 2
    print(resolved)

    total = (len(set(spec.c_mag_values)) * len(set(spec.v_nor_values))
             * spec.runs_per_cell)
    done = [0]

    def progress(key):
        done[0] += 1
        if not args.quiet:
            print(f"\r{done[0]}/{total} runs", end="", file=sys.stderr, flush=True)

    summaries, run_records = run_sweep(
        spec, collect_runs=args.journal,
        journal_dir=(out_dir / "journals") if args.event_journal else None,
        log=progress)
    if not args.quiet:
        print(file=sys.stderr)

    try:
        written = emit_tables(summaries, out_dir, runs=run_records)
    except OSError as exc:
        print(f"simulate: error: cannot write to {out_dir}: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(f"wrote {path}")
    return 0
