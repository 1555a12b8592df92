"""First-order corrected option prices.

    C ~ C0 - tau * (v2 * x^2 * gamma + v3 * x^3 * speed)

``C0`` and the sensitivities are Black-Scholes quantities at the effective
volatility. The coefficients already carry the sqrt(epsilon) scale, so the
mean-reversion rate never appears here.
"""

from __future__ import annotations

import datetime as dt
import logging
from dataclasses import dataclass
from enum import Enum

from .black_scholes import BsInputs, OptionType, bs_price, greeks
from .market_data import OptionQuote
from .smile import SmileFit

log = logging.getLogger(__name__)

_CONSISTENCY_TOL = 1e-12


class PricingError(ValueError):
    pass


class IntraRegimeError(PricingError):
    """Option expires after the next possible regime switch."""


class Model(str, Enum):
    BLACK_SCHOLES = "bs"
    FOUQUE_STANDARD = "fouque"
    FOUQUE_REGIME = "regime"


@dataclass(frozen=True)
class PerturbationPrice:
    c0: float
    correction: float
    total: float
    model: Model
    regime: int | None = None

    @property
    def negative(self) -> bool:
        return self.total < 0.0


@dataclass(frozen=True)
class RegimePricingContext:
    regime_index: int
    sigma_bar_i: float
    fit_i: SmileFit
    next_switch_date: dt.date

    def __post_init__(self):
        if not self.sigma_bar_i > 0:
            raise ValueError("sigma_bar_i must be positive")
        if abs(self.fit_i.sigma_bar - self.sigma_bar_i) > _CONSISTENCY_TOL:
            raise ValueError(
                f"regime fit was calibrated at sigma_bar={self.fit_i.sigma_bar}, not {self.sigma_bar_i}"
            )


def correction_term(inp: BsInputs, v2: float, v3: float) -> float:
    g = greeks(inp)
    x = inp.spot
    return -inp.tau * (v2 * x * x * g.gamma + v3 * x**3 * g.speed)


def _make(c0: float, correction: float, model: Model, regime: int | None) -> PerturbationPrice:
    out = PerturbationPrice(c0=c0, correction=correction, total=c0 + correction, model=model, regime=regime)
    if out.negative:
        log.warning("corrected %s price is negative (%.6g); not clamped", model.value, out.total)
    return out


def price_corrected(
    inp: BsInputs,
    fit: SmileFit,
    option_type: "str | OptionType" = OptionType.CALL,
    model: Model = Model.FOUQUE_STANDARD,
    regime: int | None = None,
) -> PerturbationPrice:
    """Corrected price with ``inp.vol`` equal to the fit's effective volatility.

    Puts reuse the call correction: gamma and speed do not depend on the
    option type.
    """
    if abs(inp.vol - fit.sigma_bar) > _CONSISTENCY_TOL:
        raise PricingError(f"inputs use vol {inp.vol} but the fit was made at sigma_bar {fit.sigma_bar}")
    if abs(inp.rate - fit.rate) > _CONSISTENCY_TOL:
        raise PricingError(f"inputs use rate {inp.rate} but the fit was made at rate {fit.rate}")
    c0 = bs_price(inp, option_type)
    return _make(c0, correction_term(inp, fit.v2, fit.v3), model, regime)


def expiry_date(quote_date: dt.date, expiry_years: float) -> dt.date:
    return quote_date + dt.timedelta(days=expiry_years * 365.0)


def price_with_model(
    quote: OptionQuote,
    model: "Model | str",
    fit: SmileFit,
    spot: float,
    rate: float,
    ctx: RegimePricingContext | None = None,
) -> PerturbationPrice:
    """Price one quote with plain Black-Scholes, the global fit, or the regime fit.

    ``fit`` is the global (standard) calibration; Black-Scholes prices use its
    effective volatility with no correction.
    """
    model = Model(model)
    if model is Model.FOUQUE_REGIME:
        if ctx is None:
            raise PricingError("regime pricing needs a RegimePricingContext")
        horizon = (ctx.next_switch_date - quote.quote_date).days / 365.0
        if quote.expiry > horizon + 1e-12:
            raise IntraRegimeError(
                f"expiry {quote.expiry:g}y (K={quote.strike:g}) runs past the next possible regime "
                f"switch on {ctx.next_switch_date.isoformat()} ({horizon:.4f}y away)"
            )
        inp = BsInputs(spot, quote.strike, rate, ctx.sigma_bar_i, quote.expiry)
        return price_corrected(inp, ctx.fit_i, quote.option_type, model, ctx.regime_index)

    inp = BsInputs(spot, quote.strike, rate, fit.sigma_bar, quote.expiry)
    if model is Model.BLACK_SCHOLES:
        return _make(bs_price(inp, quote.option_type), 0.0, model, None)
    return price_corrected(inp, fit, quote.option_type, model, None)
