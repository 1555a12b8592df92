import datetime as dt
import logging
import math

import pytest

from regimevol.black_scholes import BsInputs, bs_price, greeks
from regimevol.market_data import OptionQuote
from regimevol.pricer import (
    IntraRegimeError,
    Model,
    PricingError,
    RegimePricingContext,
    correction_term,
    price_corrected,
    price_with_model,
)
from regimevol.smile import SmileFit, coefficients_from_fit, fit_from_coefficients

D = dt.date(2003, 4, 29)


def make_fit(a, b, sigma_bar, rate):
    v2, v3 = coefficients_from_fit(a, b, sigma_bar, rate)
    return SmileFit(a, b, sigma_bar, rate, v2, v3, 0.0, 5)


def test_zero_coefficients_give_zero_correction():
    assert correction_term(BsInputs(100, 100, 0, 0.2, 0.5), 0.0, 0.0) == 0.0


def test_correction_vanishes_near_expiry():
    # off the money the Gaussian factor kills the correction outright
    assert abs(correction_term(BsInputs(100, 105, 0, 0.2, 1e-8), 0.01, -0.005)) <= 1e-6
    # at the money it shrinks like sqrt(tau)
    c1 = correction_term(BsInputs(100, 100, 0, 0.2, 1e-8), 0.01, -0.005)
    c2 = correction_term(BsInputs(100, 100, 0, 0.2, 4e-8), 0.01, -0.005)
    assert c2 / c1 == pytest.approx(2.0, rel=1e-3)


def test_correction_matches_composed_closed_forms():
    # mpmath at 40 digits composing gamma and the third spot derivative
    # from their closed forms: -2.46216631155691697455...
    got = correction_term(BsInputs(100, 100, 0, 0.2, 0.5), 0.01, -0.005)
    assert got == pytest.approx(-2.462166311556917, rel=1e-13)


def test_correction_is_linear():
    inp = BsInputs(950, 925, 0.03, 0.13, 0.3)
    base = correction_term(inp, 0.004, -0.0007)
    for lam in (-2.0, 0.5, 7.0):
        assert correction_term(inp, lam * 0.004, lam * -0.0007) == pytest.approx(lam * base, abs=1e-12)


def test_flat_fit_gives_black_scholes():
    inp = BsInputs(900, 925, 0.02, 0.1277, 0.38)
    res = price_corrected(inp, make_fit(0.0, 0.1277, 0.1277, 0.02))
    assert res.correction == 0.0
    assert res.total == res.c0 == bs_price(inp)


def test_decomposition_is_exact():
    inp = BsInputs(900, 890, 0.01, 0.15, 0.3)
    fit = make_fit(-0.05, 0.16, 0.15, 0.01)
    res = price_corrected(inp, fit)
    assert res.total == res.c0 + res.correction
    assert res.correction == correction_term(inp, fit.v2, fit.v3) != 0.0


def test_put_reuses_call_correction():
    inp = BsInputs(900, 890, 0.01, 0.15, 0.3)
    fit = make_fit(-0.05, 0.16, 0.15, 0.01)
    call = price_corrected(inp, fit, "call")
    put = price_corrected(inp, fit, "put")
    assert put.correction == call.correction
    assert call.total - put.total == pytest.approx(900 - 890 * math.exp(-0.003), abs=1e-10)


def test_inconsistent_fit_rejected():
    with pytest.raises(PricingError, match="vol"):
        price_corrected(BsInputs(900, 900, 0.0, 0.2, 0.3), make_fit(0, 0.1, 0.1277, 0.0))
    with pytest.raises(PricingError, match="rate"):
        price_corrected(BsInputs(900, 900, 0.0, 0.1277, 0.3), make_fit(0, 0.1, 0.1277, 0.05))


def test_negative_total_is_flagged_not_clamped(caplog):
    inp = BsInputs(100, 130, 0.0, 0.2, 0.3)
    fit = make_fit(*fit_from_coefficients(0.5, 0.0, 0.2, 0.0), 0.2, 0.0)
    with caplog.at_level(logging.WARNING, logger="regimevol.pricer"):
        res = price_corrected(inp, fit)
    assert res.negative and res.total < 0
    assert "negative" in caplog.text


def _ctx(sigma_i=0.116, regime=1, switch=dt.date(2004, 1, 1)):
    return RegimePricingContext(regime, sigma_i, make_fit(-0.04, 0.15, sigma_i, 0.02), switch)


def test_black_scholes_mode_uses_global_sigma_bar():
    q = OptionQuote(D, 0.14, 890, 43.0, 43.6)
    res = price_with_model(q, Model.BLACK_SCHOLES, make_fit(-0.04, 0.15, 0.1277, 0.02), 900, 0.02)
    assert res.correction == 0.0
    assert res.c0 == bs_price(BsInputs(900, 890, 0.02, 0.1277, 0.14))


def test_regime_mode_uses_regime_sigma_bar():
    q = OptionQuote(D, 0.14, 890, 43.0, 43.6)
    ctx = _ctx()
    res = price_with_model(q, "regime", make_fit(-0.04, 0.15, 0.1277, 0.02), 900, 0.02, ctx)
    assert res.regime == 1
    assert res.c0 == bs_price(BsInputs(900, 890, 0.02, 0.116, 0.14))
    g = greeks(BsInputs(900, 890, 0.02, 0.116, 0.14))
    fit = ctx.fit_i
    assert res.correction == pytest.approx(-0.14 * (fit.v2 * 900**2 * g.gamma + fit.v3 * 900**3 * g.speed), rel=1e-14)


def test_standard_mode_on_flat_fit_equals_black_scholes():
    q = OptionQuote(D, 0.3, 910, 20, 21)
    fit = make_fit(0.0, 0.1277, 0.1277, 0.02)
    bs = price_with_model(q, "bs", fit, 900, 0.02).total
    std = price_with_model(q, "fouque", fit, 900, 0.02).total
    assert std == pytest.approx(bs, abs=1e-12)


def test_regime_mode_guards():
    q = OptionQuote(D, 1.2, 900, 40, 41)
    ctx = _ctx(switch=D + dt.timedelta(days=round(0.5 * 365)))
    with pytest.raises(IntraRegimeError):
        price_with_model(q, "regime", None, 900, 0.02, ctx)
    with pytest.raises(PricingError):
        price_with_model(q, "regime", None, 900, 0.02, None)


def test_context_requires_matching_fit():
    with pytest.raises(ValueError):
        RegimePricingContext(1, 0.116, make_fit(0, 0.1, 0.1277, 0.0), dt.date(2004, 1, 1))
