import math

import numpy as np
import pytest

from letfsim.letf import (DegenerateNavError, LetfParams, LetfState,
                          actual_leverage, apply_fills, desired_order,
                          init_state, nav, rebalance_quantity)
from letfsim.orderbook import BUY, SELL, Fill


def params(c_mag=10, v_nor=0.1, leverage=2.0):
    return LetfParams.from_grid(c_mag, v_nor, leverage)


class TestParams:
    def test_threshold_grid(self):
        # Threshold = v_nor * c_mag across the standard grid, always integral.
        for c_mag in range(10, 101, 10):
            for i, v_nor in enumerate((0.1, 0.2, 0.3, 0.4, 0.5), start=1):
                assert params(c_mag, v_nor).v_thr == i * c_mag // 10

    def test_off_grid_threshold(self):
        assert params(10, 0.7).v_thr == 7

    def test_initial_cash_scales_with_c_mag(self):
        assert params(30).initial_cash == 30_000_000.0

    def test_rejects_sub_share_threshold(self):
        with pytest.raises(ValueError):
            params(10, 0.01)

    def test_rejects_unlevered_target(self):
        with pytest.raises(ValueError):
            params(10, 0.1, leverage=1.0)


class TestInitState:
    def test_c_mag_10(self):
        st = init_state(params(10), 10_000)
        assert st.shares == 2_000
        assert st.cash == -10_000_000.0
        assert nav(st, 10_000) == pytest.approx(10_000_000.0)
        assert actual_leverage(st, 10_000) == pytest.approx(2.0)

    def test_c_mag_30(self):
        st = init_state(params(30), 10_000)
        assert st.shares == 6_000
        assert st.cash == -30_000_000.0

    def test_shares_rounded_on_inexact_division(self):
        st = init_state(params(10), 10_007)
        assert st.shares == round(2e7 / 10_007)
        assert nav(st, 10_007) == pytest.approx(10_000_000.0)


class TestNavLeverage:
    def test_hand_values(self):
        st = LetfState(2_000, -10_000_000.0, params(10))
        assert nav(st, 10_005) == pytest.approx(10_010_000.0)
        assert actual_leverage(st, 10_005) == pytest.approx(20_010_000 / 10_010_000)

    def test_no_exposure(self):
        st = LetfState(0, 10_000_000.0, params(10))
        assert actual_leverage(st, 10_000) == 0.0

    def test_degenerate_nav_raises(self):
        st = LetfState(100, -2_000_000.0, params(10))
        with pytest.raises(DegenerateNavError):
            actual_leverage(st, 10_000)


class TestRebalanceQuantity:
    def test_zero_at_target(self):
        st = init_state(params(10), 10_000)
        assert rebalance_quantity(st, 10_000) == pytest.approx(0.0)

    def test_worked_examples_up_five(self):
        # Price +5 from a fresh fund: 0.9995 (c_mag 10) and 2.9985 (c_mag 30).
        st10 = init_state(params(10), 10_000)
        st30 = init_state(params(30), 10_000)
        assert rebalance_quantity(st10, 10_005) == pytest.approx(10_000 / 10_005)
        assert rebalance_quantity(st30, 10_005) == pytest.approx(30_000 / 10_005)
        assert abs(rebalance_quantity(st10, 10_005) - 0.9995) < 1e-3
        assert abs(rebalance_quantity(st30, 10_005) - 2.9985) < 1e-3

    def test_worked_examples_up_nine(self):
        st10 = init_state(params(10), 10_000)
        st30 = init_state(params(30), 10_000)
        assert abs(rebalance_quantity(st10, 10_009) - 1.798) < 1e-3
        assert abs(rebalance_quantity(st30, 10_009) - 5.395) < 1e-3

    def test_price_rise_means_buy_fall_means_sell(self):
        st = init_state(params(10), 10_000)
        assert rebalance_quantity(st, 10_050) > 0
        assert rebalance_quantity(st, 9_950) < 0

    def test_unrounded_execution_restores_target(self):
        rng = np.random.default_rng(99)
        checked = 0
        while checked < 10_000:
            shares = int(rng.integers(-5_000, 50_000))
            price = int(rng.integers(1_000, 30_000))
            cash = float(rng.uniform(-2e8, 2e8))
            lev = float(rng.uniform(1.2, 4.0))
            p = LetfParams(lev, 10, 0.1, 1, 1e7)
            st = LetfState(shares, cash, p)
            if nav(st, price) <= 0:
                continue
            ds = rebalance_quantity(st, price)
            new_exposure = price * (shares + ds)
            new_nav = new_exposure + cash - ds * price
            assert abs(new_exposure / new_nav - lev) <= 1e-10 * lev
            checked += 1


class TestDesiredOrder:
    def test_below_threshold_no_order(self):
        assert desired_order(0.9995, 1) is None
        assert desired_order(0.9995, 2) is None

    def test_at_threshold_trades_rounded_quantity(self):
        assert desired_order(1.0, 1) == (BUY, 1)
        assert desired_order(-5.395, 3) == (SELL, 5)
        assert desired_order(3.6, 3) == (BUY, 4)

    def test_floor_mode(self):
        assert desired_order(3.6, 3, rounding="floor") == (BUY, 3)
        assert desired_order(-5.9, 3, rounding="floor") == (SELL, 5)

    def test_quantity_never_below_threshold(self):
        for mag in (1.0, 1.49, 2.51, 7.7):
            for thr in (1, 2):
                got = desired_order(mag, thr)
                if got is not None:
                    assert got[1] >= thr

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            desired_order(5.0, 0)
        with pytest.raises(ValueError):
            desired_order(5.0, 1, rounding="ceil")

    def test_trigger_price_move_tracks_normalized_threshold(self):
        # Smallest integer move from a fresh fund that triggers an order sits
        # within one tick of 50 * v_nor, for every cell of the grid.
        for c_mag in range(10, 101, 10):
            for v_nor in (0.1, 0.2, 0.3, 0.4, 0.5):
                p = params(c_mag, v_nor)
                st = init_state(p, 10_000)
                for sign in (+1, -1):
                    move = next(d for d in range(1, 100)
                                if desired_order(
                                    rebalance_quantity(st, 10_000 + sign * d),
                                    p.v_thr) is not None)
                    assert abs(move - 50 * v_nor) <= 1


class TestApplyFills:
    def test_buy(self):
        st = LetfState(2_000, -10_000_000.0, params(10))
        apply_fills(st, BUY, [Fill(10_005, 1, 3, -1, 7)])
        assert st.shares == 2_001
        assert st.cash == -10_010_005.0

    def test_empty_noop(self):
        st = LetfState(2_000, -10_000_000.0, params(10))
        apply_fills(st, SELL, [])
        assert (st.shares, st.cash) == (2_000, -10_000_000.0)

    def test_sell_multiple(self):
        st = LetfState(2_000, -10_000_000.0, params(10))
        apply_fills(st, SELL, [Fill(9_990, 2, 1, -1, 7), Fill(9_985, 1, 2, -1, 7)])
        assert st.shares == 1_997
        assert st.cash == -10_000_000.0 + 29_965.0

    def test_nav_conserved_at_fill_price(self):
        st = LetfState(2_000, -10_000_000.0, params(10))
        before = nav(st, 10_005)
        apply_fills(st, BUY, [Fill(10_005, 3, 1, -1, 7)])
        assert nav(st, 10_005) == pytest.approx(before)

    def test_integer_rounding_leverage_bound(self):
        rng = np.random.default_rng(7)
        checked = 0
        while checked < 10_000:
            shares = int(rng.integers(100, 50_000))
            price = int(rng.integers(1_000, 30_000))
            cash = float(rng.uniform(-2e8, 2e8))
            lev = float(rng.uniform(1.2, 4.0))
            p = LetfParams(lev, 10, 0.1, 1, 1e7)
            st = LetfState(shares, cash, p)
            value = nav(st, price)
            if value <= 0:
                continue
            ds = rebalance_quantity(st, price)
            qty = int(math.floor(abs(ds) + 0.5))
            side = BUY if ds > 0 else SELL
            if qty:
                apply_fills(st, side, [Fill(price, qty, 1, -1, 0)])
            assert nav(st, price) == pytest.approx(value)
            assert abs(actual_leverage(st, price) - lev) <= price / value
            checked += 1
