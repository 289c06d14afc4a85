"""Return-series statistics and per-cell Monte Carlo aggregation.

Conventions, fixed for reproducibility: kurtosis uses biased central sample
moments (m4/m2^2, reported as excess by default); the squared-return
autocorrelation uses the biased 1/N normalization with the global mean;
volatility is the ddof=1 standard deviation of the sampled log returns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .engine import RunResult
from .letf import RebalanceEvent

ACF_LAGS = (1, 2, 3, 4, 5)


class UndefinedStatisticError(ValueError):
    """The statistic has no defined value on this series (e.g. zero variance)."""


def sampled_log_returns(prices: Sequence[float], interval: int = 1) -> np.ndarray:
    """Consecutive log ratios of every `interval`-th price."""
    if interval < 1:
        raise ValueError(f"interval must be >= 1, got {interval}")
    arr = np.asarray(prices, dtype=float)[::interval]
    if arr.size < 2:
        raise ValueError("need at least two sampled prices")
    if not (arr > 0).all() or not np.isfinite(arr).all():
        raise ValueError("prices must be positive and finite")
    return np.diff(np.log(arr))


def kurtosis(returns: Sequence[float], excess: bool = False) -> float:
    """m4/m2^2 of the sample, minus 3 when `excess`."""
    x = np.asarray(returns, dtype=float)
    if x.size < 4:
        raise ValueError("need at least four observations")
    d = x - x.mean()
    m2 = float((d * d).mean())
    if m2 == 0.0:
        raise UndefinedStatisticError("zero variance")
    m4 = float((d ** 4).mean())
    k = m4 / (m2 * m2)
    return k - 3.0 if excess else k


def excess_kurtosis(returns: Sequence[float]) -> float:
    """Excess kurtosis: 0 for a normal sample, positive for fat tails."""
    return kurtosis(returns, excess=True)


def acf_squared(returns: Sequence[float], lag: int) -> float:
    """Sample autocorrelation of squared returns at `lag`."""
    x = np.asarray(returns, dtype=float)
    n = x.size
    if not 1 <= lag <= n // 2:
        raise ValueError(f"lag must be in [1, {n // 2}], got {lag}")
    s = x * x
    d = s - s.mean()
    denom = float((d * d).sum())
    if denom == 0.0:
        raise UndefinedStatisticError("squared returns have zero variance")
    return float((d[:-lag] * d[lag:]).sum()) / denom


def volatility(returns: Sequence[float]) -> float:
    """Sample (ddof=1) standard deviation of the returns."""
    x = np.asarray(returns, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two observations")
    return float(x.std(ddof=1))


def rebalance_metrics(events: Iterable[RebalanceEvent]) -> tuple[int, int, float]:
    """(count, total_qty, qty_per_trade) over filled rebalances.

    Zero-fill (unsuccessful) events are excluded from the count; the ratio is
    0 when nothing filled.
    """
    count = 0
    total = 0
    for e in events:
        if e.filled_qty >= 1:
            count += 1
            total += e.filled_qty
    return count, total, (total / count if count else 0.0)


@dataclass
class CellSummary:
    c_mag: int
    v_nor: float
    v_thr: int
    runs: int
    collapse_fraction: float
    reported: bool               # False renders as a dashed cell
    mean_rebalance_count: float
    mean_total_rebalance_qty: float
    mean_qty_per_trade: float
    mean_volatility: float
    mean_excess_kurtosis: float
    mean_acf_sq: tuple[float, ...]   # lags 1..5


def _nanmean(values: list[float]) -> float:
    finite = [v for v in values if not math.isnan(v)]
    return sum(finite) / len(finite) if finite else float("nan")


def summarize_cell(results: Sequence[RunResult], c_mag: int, v_nor: float,
                   v_thr: int) -> CellSummary:
    """Average per-run metrics over the cell's non-collapsed runs.

    A cell where more than half the runs collapsed is marked unreported.
    Statistics undefined on a particular run (degenerate series) drop out of
    that metric's mean.
    """
    if not results:
        raise ValueError("need at least one run")
    live = [r for r in results if not r.collapsed]
    collapse_fraction = 1.0 - len(live) / len(results)

    counts, totals, per_trade = [], [], []
    vols, kurts = [], []
    acfs: list[list[float]] = [[] for _ in ACF_LAGS]
    for r in live:
        c, tq, ratio = rebalance_metrics(r.rebalance_events)
        counts.append(float(c))
        totals.append(float(tq))
        per_trade.append(ratio)
        try:
            rets = sampled_log_returns(r.price_series)
        except ValueError:
            rets = None
        vols.append(_try_stat(volatility, rets))
        kurts.append(_try_stat(excess_kurtosis, rets))
        for i, lag in enumerate(ACF_LAGS):
            acfs[i].append(_try_stat(acf_squared, rets, lag))

    return CellSummary(
        c_mag=c_mag, v_nor=v_nor, v_thr=v_thr, runs=len(results),
        collapse_fraction=collapse_fraction,
        reported=collapse_fraction <= 0.5,
        mean_rebalance_count=_nanmean(counts),
        mean_total_rebalance_qty=_nanmean(totals),
        mean_qty_per_trade=_nanmean(per_trade),
        mean_volatility=_nanmean(vols),
        mean_excess_kurtosis=_nanmean(kurts),
        mean_acf_sq=tuple(_nanmean(col) for col in acfs),
    )


def _try_stat(fn, rets, *args) -> float:
    if rets is None:
        return float("nan")
    try:
        return fn(rets, *args)
    except (UndefinedStatisticError, ValueError):
        return float("nan")
