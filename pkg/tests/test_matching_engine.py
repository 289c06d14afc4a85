import numpy as np
import pytest

from letfsim.orderbook import BUY, SELL, Fill, Order, OrderBook, OrderRejected

from reference_book import ReferenceBook, random_event_stream, replay


def make_book(**kw):
    return OrderBook(tick_size=kw.pop("tick_size", 1), **kw)


def limit(book, oid, side, price, qty=1, t=0, owner=0):
    return book.submit_limit(Order(oid, owner, side, price, qty, t), t)


class TestSubmitLimit:
    def test_rests_on_empty_book(self):
        book = make_book()
        fills = limit(book, 1, BUY, 10_000)
        assert fills == []
        assert book.best_bid() == 10_000
        assert book.best_ask() is None

    def test_walks_price_levels_in_order(self):
        book = make_book()
        limit(book, 1, SELL, 10_000, t=5)
        limit(book, 2, SELL, 10_001, t=5)
        fills = book.submit_limit(Order(3, 9, BUY, 10_002, 2, 6), 6)
        assert [(f.price, f.quantity) for f in fills] == [(10_000, 1), (10_001, 1)]
        assert len(book) == 0
        assert book.last_trade_price == 10_001

    def test_time_priority_at_equal_price(self):
        book = make_book()
        limit(book, 1, SELL, 10_000, t=3)
        limit(book, 2, SELL, 10_000, t=7)
        fills = limit(book, 3, BUY, 10_000, t=8)
        assert len(fills) == 1
        assert book.get(1) is None          # earlier order filled
        assert book.get(2) is not None

    def test_order_id_breaks_ties(self):
        book = make_book()
        limit(book, 7, SELL, 10_000, t=3)
        limit(book, 2, SELL, 10_000, t=3)
        fills = limit(book, 9, BUY, 10_000, t=3)
        assert book.get(2) is None
        assert book.get(7) is not None
        assert fills[0].maker_id == 0

    def test_partial_fill_rests_remainder(self):
        book = make_book()
        limit(book, 1, SELL, 10_000, qty=1)
        fills = book.submit_limit(Order(2, 1, BUY, 10_000, 3, 1), 1)
        assert [(f.price, f.quantity) for f in fills] == [(10_000, 1)]
        assert book.get(2).quantity == 2
        assert book.best_bid() == 10_000

    def test_fill_at_maker_price(self):
        book = make_book()
        limit(book, 1, SELL, 9_990)
        fills = limit(book, 2, BUY, 10_010, t=1)
        assert fills[0].price == 9_990

    @pytest.mark.parametrize("price", [0, -5, 10_001])
    def test_rejects_bad_price(self, price):
        book = make_book(tick_size=10)
        with pytest.raises(OrderRejected):
            limit(book, 1, BUY, price)
        assert len(book) == 0

    def test_rejects_bad_quantity_and_duplicate_id(self):
        book = make_book()
        with pytest.raises(OrderRejected):
            limit(book, 1, BUY, 100, qty=0)
        limit(book, 2, BUY, 100)
        with pytest.raises(OrderRejected):
            limit(book, 2, BUY, 90)

    def test_self_match_is_allowed(self):
        book = make_book()
        limit(book, 1, SELL, 10_000, owner=4)
        fills = limit(book, 2, BUY, 10_000, owner=4, t=1)
        assert fills[0].maker_id == 4 and fills[0].taker_id == 4


class TestSubmitMarket:
    def test_empty_contra_side_returns_no_fills(self):
        book = make_book()
        assert book.submit_market(BUY, 3, taker=-1, now=0) == []

    def test_walks_book(self):
        book = make_book()
        for oid, px in ((1, 10_000), (2, 10_003), (3, 10_010)):
            limit(book, oid, SELL, px)
        fills = book.submit_market(BUY, 2, taker=-1, now=1)
        assert [(f.price, f.quantity) for f in fills] == [(10_000, 1), (10_003, 1)]
        assert book.best_ask() == 10_010

    def test_remainder_discarded(self):
        book = make_book()
        limit(book, 1, SELL, 10_000)
        fills = book.submit_market(BUY, 5, taker=-1, now=1)
        assert [(f.price, f.quantity) for f in fills] == [(10_000, 1)]
        assert len(book) == 0               # nothing rests from a market order

    def test_rejects_bad_quantity(self):
        book = make_book()
        with pytest.raises(ValueError):
            book.submit_market(SELL, 0, taker=-1, now=0)


class TestExpiry:
    def test_age_equal_to_lifetime_removed(self):
        book = make_book()
        limit(book, 1, BUY, 100, t=0)
        assert book.expire_orders(now=10_000, lifetime=10_000) == 1
        assert len(book) == 0

    def test_age_below_lifetime_retained(self):
        book = make_book()
        limit(book, 1, BUY, 100, t=1)
        assert book.expire_orders(now=10_000, lifetime=10_000) == 0
        assert book.best_bid() == 100

    def test_exact_count(self):
        book = make_book()
        for oid, t in ((1, 0), (2, 4_999), (3, 9_999)):
            book.submit_limit(Order(oid, 0, BUY, 100 - oid, 1, t), t)
        assert book.expire_orders(now=10_000, lifetime=10_000) == 1
        assert book.get(1) is None

    def test_idempotent(self):
        book = make_book()
        for oid in range(5):
            limit(book, oid, SELL, 200 + oid, t=0)
        assert book.expire_orders(now=50, lifetime=10) == 5
        assert book.expire_orders(now=50, lifetime=10) == 0

    def test_priority_of_survivors_unchanged(self):
        book = make_book()
        limit(book, 1, BUY, 100, t=0)
        limit(book, 2, BUY, 100, t=5)
        limit(book, 3, BUY, 101, t=6)
        book.expire_orders(now=10, lifetime=10)
        fills = book.submit_market(SELL, 2, taker=-1, now=10)
        assert [f.maker_id for f in fills] == [0, 0]
        assert book.get(2) is None and book.get(3) is None


class TestBestQuotes:
    def test_empty(self):
        book = make_book()
        assert book.best_bid() is None and book.best_ask() is None

    def test_max_bid_min_ask(self):
        book = make_book()
        limit(book, 1, BUY, 9_990)
        limit(book, 2, BUY, 9_995)
        limit(book, 3, SELL, 10_005)
        limit(book, 4, SELL, 10_002)
        assert book.best_bid() == 9_995
        assert book.best_ask() == 10_002


def assert_uncrossed(book):
    bid, ask = book.best_bid(), book.best_ask()
    assert bid is None or ask is None or bid < ask


def test_random_streams_match_reference_matcher():
    # Small-instance oracle: a rescanning matcher must agree event by event.
    rng = np.random.default_rng(2024)
    for _ in range(500):
        events = random_event_stream(rng, max_orders=20)
        book = make_book()
        ref = ReferenceBook()
        for ev in events:
            got, want = replay(book, ref, ev)
            assert got == want, f"divergence on {ev}"
            assert book.snapshot() == ref.snapshot()
            assert_uncrossed(book)


def test_compaction_preserves_behavior():
    # Enough expiries to force the stale-entry rebuild, then keep matching.
    book = make_book()
    oid = 0
    for t in range(6_000):
        book.submit_limit(Order(oid, 0, BUY, 5_000 - (oid % 97), 1, t), t)
        oid += 1
        book.expire_orders(t, 1_000)
    assert len(book) == 1_000
    fills = book.submit_market(SELL, 3, taker=-1, now=6_000)
    assert [f.price for f in fills] == sorted((f.price for f in fills), reverse=True)


def test_journal_records_events():
    records = []
    book = OrderBook(tick_size=1, journal=records.append)
    limit(book, 1, SELL, 100, t=0)
    limit(book, 2, BUY, 100, t=1)
    limit(book, 3, BUY, 90, t=1)
    book.expire_orders(now=20_000, lifetime=10_000)
    kinds = [r["event"] for r in records]
    assert kinds == ["place", "place", "fill", "place", "expire"]
    fill = records[2]
    assert fill == {"time": 1, "event": "fill", "order_id": 1, "side": SELL,
                    "price": 100, "quantity": 1}
