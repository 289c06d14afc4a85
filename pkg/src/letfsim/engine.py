"""One simulation run: agent scheduling, price recording, fund hook, collapse.

Within a step, in order: stale orders expire; the next agent of the current
random permutation round adapts its weights, prices a one-share limit order,
and submits it; the levered fund checks whether the current market price
calls for a rebalance and, if so, sends an immediate-or-cancel market order;
finally time advances by one — unless the fund's triggered order got zero
fills and `time_hold_on_failed_rebalance` is set, in which case the clock
holds.  The market price is the most recent trade price, carried forward
through tradeless steps and seeded with the fundamental price.

A run halts early when the market degenerates: log-price leaves the collapse
band around the fundamental price, the fund's net asset value goes
non-positive, or `collapse_fail_limit` consecutive triggered rebalances all
received zero fills.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple, Optional

from .agents import (NormalAgent, draw_order_intent, expected_price,
                     expected_return, fundamental_return, init_agents, learn,
                     maybe_reset_weights, technical_return)
from .letf import (LetfParams, LetfState, RebalanceEvent, apply_fills,
                   desired_order, init_state, nav, rebalance_quantity)
from .orderbook import BUY, Fill, Order, OrderBook
from .rng import RunRng

LETF_AGENT_ID = -1


class ConfigError(ValueError):
    """A config field failed validation; the message names the field."""


@dataclass
class SimConfig:
    n_agents: int = 1000
    w_fund_max: float = 1.0
    w_tech_max: float = 5.0
    w_noise_max: float = 1.0
    lookback_max: int = 15_000
    noise_sigma: float = 0.03
    price_band: float = 1000.0        # half-width of the order-price draw
    order_lifetime: int = 10_000
    learn_lookback: int = 10_000
    learn_rate: float = 4.0
    learn_signal_scale: float = 1e-4  # damping on the realized return magnitude
    reset_prob: float = 0.01
    tick_size: int = 1
    fundamental_price: int = 10_000
    max_steps: int = 1_000_000
    target_leverage: float = 2.0
    c_mag: int = 10
    v_nor: float = 0.1
    letf_enabled: bool = True
    letf_rounding: str = "nearest"
    letf_start: int = 15_000     # fund trades only once the book has matured
    # Cadence of the index level the fund tracks; co-prime with the default
    # sampling_interval so fund trades precess across sample phases instead
    # of phase-locking just after each statistics sample.
    letf_mark_interval: int = 97
    seed: int = 1
    sampling_interval: int = 100
    collapse_band: float = math.log(3.0)
    time_hold_on_failed_rebalance: bool = True
    collapse_nav_check: bool = True
    collapse_fail_limit: Optional[int] = None   # defaults to n_agents

    def validate(self) -> None:
        def expect(cond, name, why):
            if not cond:
                raise ConfigError(f"{name}: {why} (got {getattr(self, name)!r})")

        expect(isinstance(self.n_agents, int) and self.n_agents >= 1,
               "n_agents", "must be an integer >= 1")
        for name in ("w_fund_max", "w_tech_max", "w_noise_max"):
            expect(getattr(self, name) >= 0, name, "must be >= 0")
        expect(self.w_fund_max + self.w_tech_max + self.w_noise_max > 0,
               "w_noise_max", "weight caps must not all be zero")
        expect(isinstance(self.lookback_max, int) and self.lookback_max >= 1,
               "lookback_max", "must be an integer >= 1")
        expect(self.noise_sigma >= 0, "noise_sigma", "must be >= 0")
        expect(self.price_band >= 0, "price_band", "must be >= 0")
        expect(isinstance(self.order_lifetime, int) and self.order_lifetime >= 1,
               "order_lifetime", "must be an integer >= 1")
        expect(isinstance(self.learn_lookback, int) and self.learn_lookback >= 1,
               "learn_lookback", "must be an integer >= 1")
        expect(self.learn_rate >= 0, "learn_rate", "must be >= 0")
        expect(self.learn_signal_scale >= 0, "learn_signal_scale", "must be >= 0")
        expect(0.0 <= self.reset_prob <= 1.0, "reset_prob", "must be in [0, 1]")
        expect(isinstance(self.tick_size, int) and self.tick_size >= 1,
               "tick_size", "must be an integer >= 1")
        expect(isinstance(self.fundamental_price, int)
               and self.fundamental_price >= self.tick_size
               and self.fundamental_price % self.tick_size == 0,
               "fundamental_price", "must be a positive multiple of tick_size")
        expect(isinstance(self.max_steps, int) and self.max_steps >= 0,
               "max_steps", "must be an integer >= 0")
        expect(isinstance(self.sampling_interval, int) and self.sampling_interval >= 1,
               "sampling_interval", "must be an integer >= 1")
        expect(self.collapse_band > 0, "collapse_band", "must be > 0")
        expect(self.letf_rounding in ("nearest", "floor"),
               "letf_rounding", "must be 'nearest' or 'floor'")
        expect(isinstance(self.letf_start, int) and self.letf_start >= 0,
               "letf_start", "must be a non-negative integer")
        expect(isinstance(self.letf_mark_interval, int) and self.letf_mark_interval >= 1,
               "letf_mark_interval", "must be an integer >= 1")
        expect(isinstance(self.seed, int) and self.seed >= 0,
               "seed", "must be a non-negative integer")
        if self.collapse_fail_limit is not None:
            expect(isinstance(self.collapse_fail_limit, int)
                   and self.collapse_fail_limit >= 1,
                   "collapse_fail_limit", "must be an integer >= 1 or null")
        if self.letf_enabled:
            expect(self.target_leverage > 1.0, "target_leverage", "must exceed 1")
            try:
                self.letf_params()
            except ValueError as exc:
                raise ConfigError(f"v_nor: {exc}") from exc

    def letf_params(self) -> LetfParams:
        return LetfParams.from_grid(self.c_mag, self.v_nor, self.target_leverage)


@dataclass
class RunResult:
    """Outcome of one run: sampled prices plus the fund's trade log.

    `price_series` holds the market price every `sampling_interval` steps
    starting at step 0, plus the final price when the run ends off-interval
    (collapse or a non-multiple max_steps).
    """
    config: SimConfig
    price_series: list[int]
    rebalance_events: list[RebalanceEvent] = field(default_factory=list)
    collapsed: bool = False
    collapse_time: Optional[int] = None
    step_count: int = 0

    def to_dict(self) -> dict:
        return {
            "params": asdict(self.config),
            "collapsed": self.collapsed,
            "collapse_time": self.collapse_time,
            "step_count": self.step_count,
            "prices": self.price_series,
            "rebalances": [asdict(e) for e in self.rebalance_events],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


class StepEvents(NamedTuple):
    time: int
    agent_id: int
    order: Optional[Order]        # the agent's order, post-matching
    fills: list[Fill]             # the agent's own fills
    rebalance: Optional[RebalanceEvent]
    expired: int
    advanced: bool


class MarketSim:
    """Mutable state of a single run; owned by exactly one caller."""

    def __init__(self, config: SimConfig,
                 journal: Optional[Callable[[dict], None]] = None):
        config.validate()
        self.config = config
        self.rng = RunRng(config.seed)
        self.book = OrderBook(config.tick_size,
                              last_trade_price=config.fundamental_price,
                              journal=journal)
        self.agents = init_agents(config.n_agents, config.w_fund_max,
                                  config.w_tech_max, config.w_noise_max,
                                  config.lookback_max, self.rng.generator)
        # The fund's position opens at the price prevailing when it starts
        # trading, so trading begins exactly at target leverage.  It marks
        # its book against the periodically recorded market price (the index
        # level), not against individual trade prints, so between marks a
        # completed rebalance leaves it balanced and quiet.
        self.letf: Optional[LetfState] = None
        self._mark = config.fundamental_price
        self._letf_idle = False
        if config.letf_enabled:
            self._letf_params: Optional[LetfParams] = config.letf_params()
            self.v_thr = self._letf_params.v_thr
            if config.letf_start == 0:
                self.letf = init_state(self._letf_params,
                                       config.fundamental_price)
        else:
            self._letf_params = None
            self.v_thr = 0
        self.t = 0
        self.last_price = config.fundamental_price
        self.prices = [config.fundamental_price]    # prices[i] = price after step i
        self.samples = [config.fundamental_price]
        self.rebalance_events: list[RebalanceEvent] = []
        self.collapsed = False
        self.collapse_time: Optional[int] = None
        self._perm: list[int] = []
        self._perm_pos = 0
        self._next_order_id = 0
        self._fail_streak = 0
        self._fail_limit = (config.collapse_fail_limit
                            if config.collapse_fail_limit is not None
                            else config.n_agents)
        band = config.collapse_band
        self._price_lo = config.fundamental_price * math.exp(-band)
        self._price_hi = config.fundamental_price * math.exp(band)

    @property
    def finished(self) -> bool:
        return self.collapsed or self.t >= self.config.max_steps

    def step(self) -> StepEvents:
        """Advance the run by one agent order (see module docstring)."""
        if self.finished:
            raise RuntimeError("run already finished")
        cfg = self.config
        t = t0 = self.t
        rng = self.rng
        expired = self.book.expire_orders(t, cfg.order_lifetime)

        pos = self._perm_pos
        if pos >= len(self._perm):
            self._perm = rng.permutation(cfg.n_agents)
            pos = 0
        agent = self.agents[self._perm[pos]]
        self._perm_pos = pos + 1

        prices = self.prices
        p_prev = self.last_price
        p_f = cfg.fundamental_price
        # A lookback signal exists only once its window lies inside recorded
        # history; before that the strategy reads zero.  Back-filling with
        # the fundamental price instead would hand every young-window
        # chartist the identical signal ln(P/P_f) - a synthetic cross-agent
        # momentum consensus that launches excursions during the first
        # lookback_max steps.
        i = t - agent.lookback
        fund_ret = fundamental_return(p_f, p_prev)
        tech_ret = technical_return(p_prev, prices[i]) if i >= 0 else 0.0
        i = t - cfg.learn_lookback
        if i >= 0:
            # The realized lookback return enters the weight update damped
            # (sign unchanged): at full cumulative scale the adaptive
            # feedback ejects the market from its stationary regime.
            learn_ret = technical_return(p_prev, prices[i])
            learn(agent, fund_ret, tech_ret,
                  learn_ret * cfg.learn_signal_scale, cfg.learn_rate,
                  cfg.w_fund_max, cfg.w_tech_max, rng)
        maybe_reset_weights(agent, cfg.reset_prob, cfg.w_fund_max,
                            cfg.w_tech_max, rng)

        noise = cfg.noise_sigma * rng.normal()
        r_e = expected_return((agent.w_fund, agent.w_tech, agent.w_noise),
                              fund_ret, tech_ret, noise)
        p_e = expected_price(p_prev, r_e)
        intent = draw_order_intent(p_e, cfg.price_band, rng, cfg.tick_size)
        order = None
        fills: list[Fill] = []
        if intent is not None:
            side, px = intent
            order = Order(self._next_order_id, agent.agent_id, side, px, 1, t)
            self._next_order_id += 1
            fills = self.book.submit_limit(order, t)
            if fills:
                self.last_price = fills[-1].price

        rebalance = None
        if self._letf_params is not None and t >= cfg.letf_start:
            if self.letf is None:
                self.letf = init_state(self._letf_params, self._mark)
            # Between marks the evaluation only changes when the fund trades,
            # so a below-threshold outcome is stable until the next mark.
            if not self._letf_idle:
                rebalance = self._rebalance_letf(t)
                if rebalance is None:
                    self._letf_idle = True

        advanced = not (rebalance is not None and rebalance.filled_qty == 0
                        and cfg.time_hold_on_failed_rebalance)
        if advanced:
            t += 1
            self.t = t
            prices.append(self.last_price)
            if not t % cfg.letf_mark_interval:
                self._mark = self.last_price
                self._letf_idle = False
            if not t % cfg.sampling_interval:
                self.samples.append(self.last_price)
        if self.collapse_check():
            self.collapsed = True
            self.collapse_time = self.t
        return StepEvents(t0, agent.agent_id, order, fills, rebalance,
                          expired, advanced)

    def _rebalance_letf(self, now: int) -> Optional[RebalanceEvent]:
        state = self.letf
        price = self._mark
        value = nav(state, price)
        if value <= 0.0:
            return None   # degenerate fund; collapse_check halts the run
        intent = desired_order(rebalance_quantity(state, price), self.v_thr,
                               self.config.letf_rounding)
        if intent is None:
            return None
        side, qty = intent
        lev_before = price * state.shares / value
        fills = self.book.submit_market(side, qty, LETF_AGENT_ID, now)
        filled = 0
        notional = 0
        for f in fills:
            filled += f.quantity
            notional += f.quantity * f.price
        apply_fills(state, side, fills)
        if filled:
            self._fail_streak = 0
            self.last_price = fills[-1].price
            avg = notional / filled
            value_after = nav(state, price)
            lev_after = (price * state.shares / value_after
                         if value_after > 0 else float("nan"))
        else:
            self._fail_streak += 1
            avg = None
            lev_after = lev_before
        event = RebalanceEvent(now, side, qty, filled, avg, lev_before, lev_after)
        self.rebalance_events.append(event)
        return event

    def collapse_check(self) -> bool:
        """True once the market has degenerated; the run halts on first True."""
        p = self.last_price
        if p < self._price_lo or p > self._price_hi:
            return True
        state = self.letf
        if state is not None:
            if (self.config.collapse_nav_check
                    and p * state.shares + state.cash <= 0.0):
                return True
            if self._fail_streak >= self._fail_limit:
                return True
        return False

    def result(self) -> RunResult:
        samples = self.samples
        off_interval = self.t % self.config.sampling_interval != 0
        if off_interval or (self.collapsed and samples[-1] != self.last_price):
            samples = samples + [self.last_price]
        return RunResult(self.config, samples, self.rebalance_events,
                         self.collapsed, self.collapse_time, self.t)


def init_run(config: SimConfig,
             journal: Optional[Callable[[dict], None]] = None) -> MarketSim:
    return MarketSim(config, journal=journal)


def run(config: SimConfig, journal_path: Optional[str] = None) -> RunResult:
    """Execute a full run; deterministic given (config, seed)."""
    if journal_path is None:
        sim = MarketSim(config)
        while not sim.finished:
            sim.step()
        return sim.result()
    with open(journal_path, "w") as fh:
        sim = MarketSim(config, journal=lambda rec: fh.write(
            json.dumps(rec, separators=(",", ":")) + "\n"))
        while not sim.finished:
            sim.step()
        return sim.result()
