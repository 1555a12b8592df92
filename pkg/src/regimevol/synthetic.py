"""Synthetic markets generated by the simulator, for end-to-end checks."""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .market_data import OptionChain, OptionQuote
from .ou import OuParams
from .pricer import Model, RegimePricingContext
from .regimes import (
    MarkovChain,
    RegimeCalendar,
    RegimeParams,
    construct_markov_chain,
    simulate_regime_sequence,
)
from .report import PricingReport, build_report
from .simulation import SimConfig, default_n_steps, mc_option_price, simulate_rsexpou_paths
from .smile import calibrate


def mc_chain(
    regimes: Mapping[int, RegimeParams],
    regime: int,
    quote_date: dt.date,
    spot: float,
    rate: float,
    strikes: Sequence[float],
    expiries: Sequence[float],
    n_paths: int,
    rho: float,
    seed: int,
    steps_per_year: int = 2520,
) -> OptionChain:
    """Option chain whose quotes are Monte Carlo prices inside one regime (bid = ask)."""
    horizon = max(expiries)
    n_steps = default_n_steps(horizon, 1.0 / steps_per_year)
    # snap expiries onto the time grid so every one is recorded
    dt_ = horizon / n_steps
    grid_expiries = [round(T / dt_) * dt_ for T in expiries]
    cfg = SimConfig(n_paths=n_paths, n_steps=n_steps, horizon=horizon, rho=rho, seed=seed)
    calendar = RegimeCalendar(switch_interval=horizon)
    bundle = simulate_rsexpou_paths(
        regimes, [regime], calendar, cfg, spot, rate, record_every=n_steps, record_times=grid_expiries
    )
    quotes = []
    for Tg in grid_expiries:
        for K in strikes:
            price, _ = mc_option_price(bundle, K, rate, Tg)
            quotes.append(OptionQuote(quote_date, Tg, K, price, price))
    return OptionChain(quote_date, spot, rate, quotes)


@dataclass(frozen=True)
class RegimeWorld:
    regimes: Mapping[int, RegimeParams]
    chain: MarkovChain
    global_sigma_bar: float
    spot: float = 100.0
    rate: float = 0.02
    rho: float = -0.2


def default_world() -> RegimeWorld:
    """Two regimes with effective volatilities of 10% and 30%, occupied 70% / 30% of the time."""

    def regime(i, sigma_bar, alpha=50.0, nu_sq=0.05):
        m = math.log(sigma_bar) - nu_sq
        ou = OuParams(alpha=alpha, m=m, beta=math.sqrt(2.0 * alpha * nu_sq))
        return RegimeParams(regime_index=i, mu=0.05, sigma_bar=ou.effective_vol, ou=ou)

    regimes = {1: regime(1, 0.10), 2: regime(2, 0.30)}
    chain = construct_markov_chain([[0.9, 0.1], [0.7 / 3.0, 1.0 - 0.7 / 3.0]], [0.7, 0.3])
    occupancy = chain.stationary()
    global_sb = math.sqrt(sum(occupancy[i - 1] * regimes[i].sigma_bar ** 2 for i in regimes))
    return RegimeWorld(regimes=regimes, chain=chain, global_sigma_bar=global_sb)


def regime_benefit_trial(
    world: RegimeWorld,
    regime: int | None,
    seed: int,
    n_paths: int = 50000,
    quote_date: dt.date = dt.date(2001, 1, 2),
    steps_per_year: int = 504,
) -> PricingReport:
    """Price an intra-regime synthetic chain with the standard and regime methods.

    ``regime=None`` draws the quote date's regime from the world's Markov chain.
    """
    if regime is None:
        regime = simulate_regime_sequence(world.chain, 1, seed)[0]
    x = world.spot
    strikes = [x * k for k in (0.97, 0.985, 1.0, 1.015, 1.03)]
    expiries = [0.1, 0.2, 0.3, 0.45]
    chain = mc_chain(
        world.regimes, regime, quote_date, x, world.rate, strikes, expiries, n_paths, world.rho, seed, steps_per_year
    )
    fit = calibrate(chain, world.global_sigma_bar)
    sigma_i = world.regimes[regime].sigma_bar
    fit_i = calibrate(chain, sigma_i)
    calendar = RegimeCalendar(labels={quote_date: regime})
    ctx = RegimePricingContext(regime, sigma_i, fit_i, calendar.next_switch_date(quote_date))
    return build_report(chain, fit, ctx, modes=tuple(Model))
