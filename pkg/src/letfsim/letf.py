"""Leveraged-ETF fund state and threshold-gated rebalancing arithmetic.

The fund targets a constant leverage ratio over one underlying asset.  After
price moves, the share adjustment restoring the target is
``(target * nav - price * shares) / price``; positive means buy.  An order is
submitted only when the unrounded magnitude of that adjustment reaches the
order-quantity threshold, which makes the triggering price move depend on the
normalized threshold alone rather than on fund size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

from .orderbook import BUY, SELL, Fill

CASH_PER_MAG = 1_000_000.0


class DegenerateNavError(ValueError):
    """Net asset value is non-positive; leverage is undefined."""


@dataclass(frozen=True)
class LetfParams:
    target_leverage: float
    c_mag: int
    v_nor: float
    v_thr: int
    initial_cash: float

    @classmethod
    def from_grid(cls, c_mag: int, v_nor: float,
                  target_leverage: float = 2.0) -> "LetfParams":
        """Build cell parameters: threshold = round(v_nor * c_mag) shares."""
        if c_mag < 1:
            raise ValueError(f"c_mag must be >= 1, got {c_mag}")
        v_thr = round(v_nor * c_mag)
        if v_thr < 1:
            raise ValueError(
                f"v_nor={v_nor} with c_mag={c_mag} yields threshold {v_thr}; "
                f"must round to at least one share")
        if target_leverage <= 1.0:
            raise ValueError(f"target_leverage must exceed 1, got {target_leverage}")
        return cls(target_leverage, c_mag, v_nor, v_thr, CASH_PER_MAG * c_mag)


@dataclass
class LetfState:
    shares: int
    cash: float     # may be negative: the fund borrows to lever up
    params: LetfParams


@dataclass
class RebalanceEvent:
    time: int
    side: str
    requested_qty: int
    filled_qty: int
    avg_price: Optional[float]   # None when nothing filled
    leverage_before: float
    leverage_after: float


def init_state(params: LetfParams, price0: int) -> LetfState:
    """Open the fund fully levered at price0.

    shares = round(target * cash / price0); with the standard grid the
    division is exact and nav equals the initial cash.
    """
    if price0 <= 0:
        raise ValueError("price0 must be positive")
    shares = round(params.target_leverage * params.initial_cash / price0)
    cash = params.initial_cash - price0 * shares
    return LetfState(shares, cash, params)


def nav(state: LetfState, price: float) -> float:
    """Mark-to-market net asset value at `price`."""
    return price * state.shares + state.cash


def actual_leverage(state: LetfState, price: float) -> float:
    value = nav(state, price)
    if value <= 0.0:
        raise DegenerateNavError(f"nav={value} at price {price}")
    return price * state.shares / value


def rebalance_quantity(state: LetfState, price: float) -> float:
    """Signed share adjustment restoring target leverage at `price`.

    Positive means buy.  Executing the full unrounded amount at `price`
    restores the target exactly: the trade conserves nav at the trade price
    and moves the exposure to target * nav.
    """
    if price <= 0:
        raise ValueError("price must be positive")
    value = nav(state, price)
    return (state.params.target_leverage * value - price * state.shares) / price


def desired_order(delta_shares: float, v_thr: int,
                  rounding: str = "nearest") -> Optional[tuple[str, int]]:
    """Gate the adjustment on the threshold and round it to whole shares.

    Emits (side, quantity) when |delta_shares| >= v_thr, else None.  The
    submitted quantity is |delta_shares| rounded to the nearest share (ties
    away from zero), or rounded down in "floor" mode; either way it is at
    least v_thr whenever the gate passes.
    """
    if v_thr < 1:
        raise ValueError(f"v_thr must be >= 1, got {v_thr}")
    mag = abs(delta_shares)
    if mag < v_thr:
        return None
    if rounding == "nearest":
        qty = int(math.floor(mag + 0.5))
    elif rounding == "floor":
        qty = int(math.floor(mag))
    else:
        raise ValueError(f"unknown rounding mode {rounding!r}")
    return (BUY if delta_shares > 0 else SELL), qty


def apply_fills(state: LetfState, side: str, fills: Iterable[Fill]) -> None:
    """Book executed fills into the position: buys add shares and spend cash,
    sells do the reverse.  Mark-to-market nav at the fill price is unchanged
    by each fill."""
    total = 0
    notional = 0
    for f in fills:
        total += f.quantity
        notional += f.quantity * f.price
    if not total:
        return
    if side == BUY:
        state.shares += total
        state.cash -= notional
    elif side == SELL:
        state.shares -= total
        state.cash += notional
    else:
        raise ValueError(f"unknown side {side!r}")
