"""Option pricing under regime-switching, fast mean-reverting stochastic volatility.

Black-Scholes leading term plus a first-order correction whose two
coefficients are calibrated from the implied-volatility smile, with a Monte
Carlo engine for exponential-OU and regime-switching exponential-OU worlds.
"""

__version__ = "0.1.0"

from .black_scholes import (
    BsInputs,
    GreekSet,
    OptionType,
    bs_price,
    constant_vol_equivalent,
    greeks,
    implied_vol,
)
from .market_data import OptionChain, OptionQuote, filter_chain, load_chain, mid_price
from .ou import OuParams, ou_exact_sample
from .pricer import Model, PerturbationPrice, RegimePricingContext, correction_term, price_corrected, price_with_model
from .regimes import (
    MarkovChain,
    RegimeCalendar,
    RegimeParams,
    construct_markov_chain,
    regime_for_date,
    regime_return_distribution,
    simulate_regime_sequence,
)
from .report import PricingReport, average_pct_error, build_report, emit_plot_data, replay_table
from .simulation import (
    PathBundle,
    SimConfig,
    ergodic_sigma_bar,
    mc_option_price,
    sigma_bar_from_returns,
    simulate_expou_paths,
    simulate_rsexpou_paths,
)
from .smile import SmileFit, SmilePoint, calibrate, coefficients_from_fit, compute_smile_points, fit_affine

__all__ = [
    "BsInputs",
    "GreekSet",
    "OptionType",
    "bs_price",
    "constant_vol_equivalent",
    "greeks",
    "implied_vol",
    "OptionChain",
    "OptionQuote",
    "filter_chain",
    "load_chain",
    "mid_price",
    "OuParams",
    "ou_exact_sample",
    "Model",
    "PerturbationPrice",
    "RegimePricingContext",
    "correction_term",
    "price_corrected",
    "price_with_model",
    "MarkovChain",
    "RegimeCalendar",
    "RegimeParams",
    "construct_markov_chain",
    "regime_for_date",
    "regime_return_distribution",
    "simulate_regime_sequence",
    "PricingReport",
    "average_pct_error",
    "build_report",
    "emit_plot_data",
    "replay_table",
    "PathBundle",
    "SimConfig",
    "ergodic_sigma_bar",
    "mc_option_price",
    "sigma_bar_from_returns",
    "simulate_expou_paths",
    "simulate_rsexpou_paths",
    "SmileFit",
    "SmilePoint",
    "calibrate",
    "coefficients_from_fit",
    "compute_smile_points",
    "fit_affine",
]
