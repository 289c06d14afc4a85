"""Figure builders over sweep outputs.

Every builder reads one input file, writes one image, and returns a small
metadata dict (axes, value range, masked-cell count, pixel size) that the
tests assert against.  Rendering is deterministic for a given input: fixed
figure size, dpi, and color scale.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import ACF_COLUMNS, SchemaError, load_cells, load_runs

DPI = 110
KINDS = ("heatmap", "lines", "pricepath", "stylized")


def _finish(fig, out_path: Path) -> tuple[int, int]:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=DPI)
    w, h = fig.get_size_inches()
    plt.close(fig)
    return int(round(w * DPI)), int(round(h * DPI))


def heatmap(in_path, out_path, metric: str = "mean_volatility") -> dict:
    """Metric over the (c_mag, v_nor) grid; unreported cells hatched."""
    table = load_cells(in_path, required=(metric, "reported"))
    values, mask = table.grid(metric)
    if mask.all():
        raise SchemaError(f"no reported values for column: {metric}")
    data = np.ma.masked_array(values, mask)
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    vmin = float(data.min())
    vmax = float(data.max())
    image = ax.imshow(data, aspect="auto", origin="upper", cmap="viridis",
                      vmin=vmin, vmax=vmax)
    # Unreported cells: hatched gray so they read as "no data", not "zero".
    ax.patch.set(hatch="///", edgecolor="0.6", facecolor="0.92")
    ax.set_xticks(range(len(table.v_nors)), [str(v) for v in table.v_nors])
    ax.set_yticks(range(len(table.c_mags)), [str(c) for c in table.c_mags])
    ax.set_xlabel("V_nor")
    ax.set_ylabel("C_mag")
    ax.set_title(metric)
    fig.colorbar(image, ax=ax, label=metric)
    size = _finish(fig, out_path)
    return {"kind": "heatmap", "metric": metric, "rows": table.c_mags,
            "cols": table.v_nors, "masked_cells": int(mask.sum()),
            "vmin": vmin, "vmax": vmax, "size_px": size,
            "path": str(out_path)}


def lines(in_path, out_path, metric: str = "mean_volatility") -> dict:
    """Metric versus v_nor, one line per c_mag."""
    table = load_cells(in_path, required=(metric, "reported"))
    values, mask = table.grid(metric)
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    plotted = 0
    for i, c_mag in enumerate(table.c_mags):
        xs = [v for j, v in enumerate(table.v_nors) if not mask[i, j]]
        ys = [values[i, j] for j in range(len(table.v_nors)) if not mask[i, j]]
        if xs:
            ax.plot(xs, ys, marker="o", label=f"C_mag={c_mag}")
            plotted += 1
    if not plotted:
        raise SchemaError(f"no reported values for column: {metric}")
    ax.set_xlabel("V_nor")
    ax.set_ylabel(metric)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    size = _finish(fig, out_path)
    return {"kind": "lines", "metric": metric, "series": plotted,
            "size_px": size, "path": str(out_path)}


def pricepath(in_path, out_path, max_paths: int = 12) -> dict:
    """Sampled price paths from runs.jsonl; collapsed runs end in a marker."""
    records = load_runs(in_path)[:max_paths]
    fig, ax = plt.subplots(figsize=(8.0, 4.5))
    collapsed_marks = 0
    for record in records:
        interval = record["sampling_interval"]
        prices = record["prices"]
        times = np.arange(len(prices)) * interval
        if len(prices) >= 2 and record["collapsed"] and \
                record["collapse_time"] is not None:
            # The final sample sits at the halt step, off the regular grid.
            times[-1] = record["collapse_time"]
        label = f"c{record['c_mag']} v{record['v_nor']} r{record['run']}"
        line, = ax.plot(times, prices, lw=0.9, label=label)
        if record["collapsed"]:
            ax.plot(times[-1], prices[-1], "x", color=line.get_color(),
                    markersize=9, markeredgewidth=2)
            collapsed_marks += 1
    ax.set_xlabel("step")
    ax.set_ylabel("market price")
    if len(records) <= 8:
        ax.legend(fontsize=7)
    ax.grid(True, alpha=0.3)
    size = _finish(fig, out_path)
    return {"kind": "pricepath", "paths": len(records),
            "collapsed_paths": collapsed_marks, "size_px": size,
            "path": str(out_path)}


def stylized(in_path, out_path) -> dict:
    """Kurtosis bars and squared-return ACF profiles per cell."""
    table = load_cells(in_path, required=("mean_excess_kurtosis",
                                          *ACF_COLUMNS))
    reported = [r for r in table.rows if r["reported"]
                and r.get("mean_excess_kurtosis", "") != ""]
    if not reported:
        raise SchemaError("no reported values for column: mean_excess_kurtosis")
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(8.0, 6.5))
    labels = [f"c{r['c_mag']}/v{r['v_nor']}" for r in reported]
    top.bar(labels, [float(r["mean_excess_kurtosis"]) for r in reported],
            color="steelblue")
    top.set_ylabel("excess kurtosis")
    top.axhline(0.0, color="k", lw=0.8)
    top.tick_params(axis="x", labelsize=7, rotation=45)
    lags = range(1, 6)
    for r, label in zip(reported, labels):
        bottom.plot(lags, [float(r[c]) for c in ACF_COLUMNS], marker="o",
                    lw=0.9, label=label)
    bottom.set_xlabel("lag")
    bottom.set_ylabel("ACF of squared returns")
    bottom.set_xticks(list(lags))
    bottom.axhline(0.0, color="k", lw=0.8)
    if len(reported) <= 12:
        bottom.legend(fontsize=6, ncol=2)
    fig.tight_layout()
    size = _finish(fig, out_path)
    return {"kind": "stylized", "cells": len(reported), "size_px": size,
            "path": str(out_path)}


def plot(kind: str, in_path, out_path, metric: str = "mean_volatility") -> dict:
    if kind == "heatmap":
        return heatmap(in_path, out_path, metric)
    if kind == "lines":
        return lines(in_path, out_path, metric)
    if kind == "pricepath":
        return pricepath(in_path, out_path)
    if kind == "stylized":
        return stylized(in_path, out_path)
    raise ValueError(f"unknown figure kind {kind!r}; expected one of {KINDS}")
