"""Price-time priority limit order book for a continuous double auction.

Limit orders that cross the contra side execute immediately, one resting
order at a time, always at the resting (maker) order's price; any remainder
rests.  Market orders walk the contra side and discard whatever cannot be
filled.  Resting orders expire once their age reaches the configured
lifetime.  Ties at equal (price, placed_at) break by ascending order id so
every matching sequence is total and reproducible.

An optional journal callback receives one dict per book event
(``place``/``fill``/``expire``); market orders appear only through their
fills.
"""

from __future__ import annotations

import heapq
from typing import Callable, NamedTuple, Optional

BUY = "buy"
SELL = "sell"

# Rebuild a side's heap once stale (expired) entries dominate it.
_COMPACT_SLACK = 1024


class OrderRejected(ValueError):
    """Order failed validation; the book is guaranteed untouched."""


class Fill(NamedTuple):
    """One execution. `price` is always the maker's limit price."""

    price: int
    quantity: int
    maker_id: int
    taker_id: int
    time: int


class Order:
    """A limit order; `quantity` holds the unfilled remainder while resting."""

    __slots__ = ("order_id", "owner", "side", "price", "quantity", "placed_at")

    def __init__(self, order_id: int, owner: int, side: str, price: int,
                 quantity: int, placed_at: int):
        self.order_id = order_id
        self.owner = owner
        self.side = side
        self.price = price
        self.quantity = quantity
        self.placed_at = placed_at

    def __repr__(self):
        return (f"Order(id={self.order_id}, owner={self.owner}, {self.side} "
                f"{self.quantity}@{self.price}, t={self.placed_at})")


class OrderBook:
    """Bid/ask queues ordered by (price, placed_at, order_id) priority."""

    __slots__ = ("tick_size", "last_trade_price", "journal",
                 "_bids", "_asks", "_orders", "_ages")

    def __init__(self, tick_size: int = 1, last_trade_price: Optional[int] = None,
                 journal: Optional[Callable[[dict], None]] = None):
        if tick_size < 1:
            raise ValueError(f"tick_size must be >= 1, got {tick_size}")
        self.tick_size = tick_size
        self.last_trade_price = last_trade_price
        self.journal = journal
        self._bids: list[tuple[int, int, int]] = []   # (-price, placed_at, order_id)
        self._asks: list[tuple[int, int, int]] = []   # (price, placed_at, order_id)
        self._orders: dict[int, Order] = {}           # resting orders only
        self._ages: list[tuple[int, int]] = []        # (placed_at, order_id)

    def __len__(self) -> int:
        return len(self._orders)

    def get(self, order_id: int) -> Optional[Order]:
        return self._orders.get(order_id)

    # -- queries ---------------------------------------------------------

    def best_bid(self) -> Optional[int]:
        order = self._live_top(self._bids)
        return order.price if order is not None else None

    def best_ask(self) -> Optional[int]:
        order = self._live_top(self._asks)
        return order.price if order is not None else None

    def snapshot(self) -> tuple[list[tuple], list[tuple]]:
        """Resting orders as (price, placed_at, order_id, quantity, owner),
        each side sorted in matching priority. Test/debug helper."""
        bids, asks = [], []
        for o in self._orders.values():
            row = (o.price, o.placed_at, o.order_id, o.quantity, o.owner)
            (bids if o.side == BUY else asks).append(row)
        bids.sort(key=lambda r: (-r[0], r[1], r[2]))
        asks.sort(key=lambda r: (r[0], r[1], r[2]))
        return bids, asks

    # -- order entry -----------------------------------------------------

    def submit_limit(self, order: Order, now: int) -> list[Fill]:
        """Match `order` against the contra side, rest any remainder.

        Raises OrderRejected (book untouched) for an off-tick or
        non-positive price, a non-positive quantity, a bad side, or a
        duplicate order id.
        """
        if order.side != BUY and order.side != SELL:
            raise OrderRejected(f"unknown side {order.side!r}")
        price = order.price
        if not isinstance(price, int) or price <= 0 or price % self.tick_size:
            raise OrderRejected(
                f"limit price {price!r} is not a positive multiple of "
                f"tick size {self.tick_size}")
        if not isinstance(order.quantity, int) or order.quantity < 1:
            raise OrderRejected(f"quantity must be a positive integer, "
                                f"got {order.quantity!r}")
        if order.order_id in self._orders:
            raise OrderRejected(f"order id {order.order_id} already resting")

        if self.journal is not None:
            self.journal({"time": now, "event": "place",
                          "order_id": order.order_id, "side": order.side,
                          "price": price, "quantity": order.quantity})
        fills = self._match(order.side, price, order.quantity, order.owner, now)
        if fills:
            for f in fills:
                order.quantity -= f.quantity
        if order.quantity:
            entry = ((-price if order.side == BUY else price),
                     order.placed_at, order.order_id)
            heapq.heappush(self._bids if order.side == BUY else self._asks, entry)
            self._orders[order.order_id] = order
            heapq.heappush(self._ages, (order.placed_at, order.order_id))
        return fills

    def submit_market(self, side: str, quantity: int, taker: int,
                      now: int) -> list[Fill]:
        """Immediate-or-cancel: walk the contra side, drop any remainder."""
        if side != BUY and side != SELL:
            raise ValueError(f"unknown side {side!r}")
        if quantity < 1:
            raise ValueError(f"quantity must be >= 1, got {quantity}")
        return self._match(side, None, quantity, taker, now)

    def expire_orders(self, now: int, lifetime: int) -> int:
        """Remove every resting order with now - placed_at >= lifetime."""
        removed = 0
        ages, orders = self._ages, self._orders
        cutoff = now - lifetime
        journal = self.journal
        while ages and ages[0][0] <= cutoff:
            _, oid = heapq.heappop(ages)
            order = orders.pop(oid, None)
            if order is not None:
                removed += 1
                if journal is not None:
                    journal({"time": now, "event": "expire", "order_id": oid,
                             "side": order.side, "price": order.price,
                             "quantity": order.quantity})
        if removed:
            self._compact()
        return removed

    # -- internals -------------------------------------------------------

    def _live_top(self, side_heap: list) -> Optional[Order]:
        # Pops entries whose orders were expired; survivors stay in place.
        orders = self._orders
        while side_heap:
            order = orders.get(side_heap[0][2])
            if order is not None:
                return order
            heapq.heappop(side_heap)
        return None

    def _match(self, side: str, limit: Optional[int], quantity: int,
               taker: int, now: int) -> list[Fill]:
        fills: list[Fill] = []
        buying = side == BUY
        contra = self._asks if buying else self._bids
        orders = self._orders
        journal = self.journal
        while quantity:
            maker = self._live_top(contra)
            if maker is None:
                break
            mprice = maker.price
            if limit is not None:
                if buying:
                    if mprice > limit:
                        break
                elif mprice < limit:
                    break
            take = maker.quantity if maker.quantity < quantity else quantity
            maker.quantity -= take
            quantity -= take
            fills.append(Fill(mprice, take, maker.owner, taker, now))
            if journal is not None:
                journal({"time": now, "event": "fill",
                         "order_id": maker.order_id, "side": maker.side,
                         "price": mprice, "quantity": take})
            if not maker.quantity:
                heapq.heappop(contra)
                del orders[maker.order_id]
        if fills:
            self.last_trade_price = fills[-1].price
        return fills

    def _compact(self):
        # Expired orders leave stale heap entries until they surface; rebuild
        # a side once stale entries outnumber live ones by 2x.
        live = len(self._orders)
        bound = 2 * live + _COMPACT_SLACK
        if len(self._bids) > bound:
            self._bids = [e for e in self._bids if e[2] in self._orders]
            heapq.heapify(self._bids)
        if len(self._asks) > bound:
            self._asks = [e for e in self._asks if e[2] in self._orders]
            heapq.heapify(self._asks)
