"""Heterogeneous trading agents blending fundamentalist, chartist, and noise views.

Each agent forms an expected return as a weight-normalized mix of a
fundamental-reversion signal, a trend signal over its own lookback window,
and a private noise draw, then prices a one-share order uniformly around the
implied expected price.  Strategy weights adapt: they move toward their cap
when the strategy's sign agreed with the realized lookback return and toward
zero when it disagreed, and are occasionally re-rolled wholesale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .orderbook import BUY, SELL


class StrategyWeights(NamedTuple):
    w_fund: float
    w_tech: float
    w_noise: float


@dataclass(slots=True)
class NormalAgent:
    agent_id: int
    w_fund: float
    w_tech: float
    w_noise: float   # fixed after initialization
    lookback: int    # trend window in steps, fixed after initialization

    @property
    def weights(self) -> StrategyWeights:
        return StrategyWeights(self.w_fund, self.w_tech, self.w_noise)


def init_agents(n: int, w_fund_max: float, w_tech_max: float,
                w_noise_max: float, lookback_max: int, generator) -> list[NormalAgent]:
    """Draw a fresh population: weights ~ U[0, cap], lookback ~ U{1..max}.

    A (measure-zero) all-zero weight triple is redrawn so the expected-return
    normalization is always defined.
    """
    wf = generator.random(n)
    wt = generator.random(n)
    wn = generator.random(n)
    lb = generator.integers(1, lookback_max, endpoint=True, size=n)
    agents = []
    for i in range(n):
        a = wf[i] * w_fund_max
        b = wt[i] * w_tech_max
        c = wn[i] * w_noise_max
        while a + b + c == 0.0:
            a = generator.random() * w_fund_max
            b = generator.random() * w_tech_max
            c = generator.random() * w_noise_max
        agents.append(NormalAgent(i, a, b, c, int(lb[i])))
    return agents


def fundamental_return(fundamental_price: float, prev_price: float) -> float:
    """Log-return expected from reversion to the fundamental price."""
    if fundamental_price <= 0 or prev_price <= 0:
        raise ValueError("prices must be positive")
    return math.log(fundamental_price / prev_price)


def technical_return(prev_price: float, lagged_price: float) -> float:
    """Realized log-return over the agent's trend window."""
    if prev_price <= 0 or lagged_price <= 0:
        raise ValueError("prices must be positive")
    return math.log(prev_price / lagged_price)


def expected_return(weights, fund_ret: float, tech_ret: float,
                    noise: float) -> float:
    """Weight-normalized mix of the three strategy returns."""
    w1, w2, u = weights
    total = w1 + w2 + u
    if total <= 0.0:
        raise ValueError("strategy weights sum to zero")
    return (w1 * fund_ret + w2 * tech_ret + u * noise) / total


def expected_price(prev_price: float, expected_ret: float) -> float:
    if prev_price <= 0:
        raise ValueError("prices must be positive")
    return prev_price * math.exp(expected_ret)


def draw_order_intent(expected: float, band: float, rng,
                      tick_size: int = 1) -> Optional[tuple[str, int]]:
    """Draw a one-share order around the expected price.

    The raw price is uniform on [expected - band, expected + band]; the agent
    buys when it undercuts the expected price and sells when it exceeds it
    (the exact tie yields no order).  The limit price is the raw draw rounded
    to the nearest tick, ties up, floored at one tick.
    """
    raw = expected - band + 2.0 * band * rng.uniform()
    if expected > raw:
        side = BUY
    elif expected < raw:
        side = SELL
    else:
        return None
    price = int(math.floor(raw / tick_size + 0.5)) * tick_size
    if price < tick_size:
        price = tick_size
    return side, price


def learn(agent: NormalAgent, fund_ret: float, tech_ret: float,
          learn_ret: float, rate: float, w_fund_max: float,
          w_tech_max: float, rng) -> None:
    """Adapt the fundamental and trend weights against the realized return.

    Each strategy's current return is compared in sign with the realized
    lookback return.  The update factor is min(1, rate * |learn_ret| * q),
    q ~ U[0,1] drawn per strategy; sign agreement pulls the weight toward its
    cap, disagreement toward zero.  A comparison where either value is
    exactly zero leaves that weight unchanged.
    """
    if learn_ret == 0.0:
        return
    scale = rate * abs(learn_ret)
    rising = learn_ret > 0.0
    if fund_ret != 0.0:
        f = scale * rng.uniform()
        if f > 1.0:
            f = 1.0
        if (fund_ret > 0.0) == rising:
            w = agent.w_fund + f * (w_fund_max - agent.w_fund)
        else:
            w = agent.w_fund - f * agent.w_fund
        agent.w_fund = min(max(w, 0.0), w_fund_max)
    if tech_ret != 0.0:
        f = scale * rng.uniform()
        if f > 1.0:
            f = 1.0
        if (tech_ret > 0.0) == rising:
            w = agent.w_tech + f * (w_tech_max - agent.w_tech)
        else:
            w = agent.w_tech - f * agent.w_tech
        agent.w_tech = min(max(w, 0.0), w_tech_max)


def maybe_reset_weights(agent: NormalAgent, prob: float, w_fund_max: float,
                        w_tech_max: float, rng) -> None:
    """Independently re-roll each adaptive weight with probability `prob`.

    The noise weight and lookback are never reset.
    """
    if prob <= 0.0:
        return
    if rng.uniform() < prob:
        agent.w_fund = rng.uniform() * w_fund_max
    if rng.uniform() < prob:
        agent.w_tech = rng.uniform() * w_tech_max
