"""Artificial market simulator: a continuous double auction traded by
heterogeneous one-share agents plus a leveraged fund that rebalances through
threshold-gated market orders, with a deterministic Monte Carlo sweep harness.
"""

from .agents import (NormalAgent, StrategyWeights, draw_order_intent,
                     expected_price, expected_return, fundamental_return,
                     learn, maybe_reset_weights, technical_return)
from .cli import SweepSpec, emit_tables, parse_config, run_sweep
from .engine import (ConfigError, MarketSim, RunResult, SimConfig, init_run,
                     run)
from .letf import (DegenerateNavError, LetfParams, LetfState, RebalanceEvent,
                   actual_leverage, apply_fills, desired_order, init_state,
                   nav, rebalance_quantity)
from .orderbook import (BUY, SELL, Fill, Order, OrderBook, OrderRejected)
from .rng import RunRng, run_seed
from .stats import (CellSummary, UndefinedStatisticError, acf_squared,
                    excess_kurtosis, kurtosis, rebalance_metrics,
                    sampled_log_returns, summarize_cell, volatility)

__version__ = "0.1.0"
