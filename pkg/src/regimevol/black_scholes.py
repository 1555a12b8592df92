"""Constant-volatility Black-Scholes kernel.

Prices, the three sensitivities used by the perturbation correction
(gamma, speed, vega), implied-volatility inversion and the constant
equivalent of a time-dependent volatility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Sequence

from scipy import integrate
from scipy.special import ndtr

SQRT_2PI = math.sqrt(2.0 * math.pi)

IV_LOWER = 1e-6
IV_UPPER = 5.0
IV_MAX_ITER = 200


class DomainError(ValueError):
    """Raised when a formula is evaluated outside its domain."""


class ArbitrageBoundError(ValueError):
    """Raised when an observed price lies outside the no-arbitrage band."""

    def __init__(self, message: str, bound: str):
        super().__init__(message)
        self.bound = bound


class OptionType(str, Enum):
    CALL = "call"
    PUT = "put"

    @classmethod
    def parse(cls, value: "str | OptionType") -> "OptionType":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown option type {value!r}; expected 'call' or 'put'") from None


@dataclass(frozen=True)
class BsInputs:
    spot: float
    strike: float
    rate: float
    vol: float
    tau: float

    def __post_init__(self):
        if not self.spot > 0:
            raise ValueError(f"spot must be positive, got {self.spot}")
        if not self.strike > 0:
            raise ValueError(f"strike must be positive, got {self.strike}")
        if not self.vol >= 0:
            raise ValueError(f"vol must be non-negative, got {self.vol}")
        if not self.tau >= 0:
            raise ValueError(f"tau must be non-negative, got {self.tau}")

    def with_vol(self, vol: float) -> "BsInputs":
        return replace(self, vol=vol)

    @property
    def discount(self) -> float:
        return math.exp(-self.rate * self.tau)


@dataclass(frozen=True)
class GreekSet:
    gamma: float
    speed: float
    vega: float


def _d1(inp: BsInputs) -> float:
    sd = inp.vol * math.sqrt(inp.tau)
    return (math.log(inp.spot / inp.strike) + (inp.rate + 0.5 * inp.vol**2) * inp.tau) / sd


def bs_price(inp: BsInputs, option_type: "str | OptionType" = OptionType.CALL) -> float:
    """European Black-Scholes price.

    At ``tau == 0`` the payoff is returned; at ``vol == 0`` the forward
    intrinsic value ``max(spot - strike*exp(-r*tau), 0)`` (calls).
    """
    kind = OptionType.parse(option_type)
    df = inp.discount
    # vol * sqrt(tau) can underflow to zero even when both are positive
    if inp.vol * math.sqrt(inp.tau) == 0.0:
        if kind is OptionType.CALL:
            return max(inp.spot - inp.strike * df, 0.0)
        return max(inp.strike * df - inp.spot, 0.0)

    d1 = _d1(inp)
    d2 = d1 - inp.vol * math.sqrt(inp.tau)
    if kind is OptionType.CALL:
        return float(inp.spot * ndtr(d1) - inp.strike * df * ndtr(d2))
    return float(inp.strike * df * ndtr(-d2) - inp.spot * ndtr(-d1))


def greeks(inp: BsInputs) -> GreekSet:
    """Gamma, speed (third spot derivative) and vega.

    These are identical for calls and puts.
    """
    if inp.tau <= 0.0:
        raise DomainError("greeks are singular at tau = 0")
    if inp.vol <= 0.0:
        raise DomainError("greeks are singular at vol = 0")
    if inp.vol * math.sqrt(inp.tau) == 0.0:
        raise DomainError("greeks are singular when vol * sqrt(tau) underflows")
    sqrt_tau = math.sqrt(inp.tau)
    sd = inp.vol * sqrt_tau
    d1 = _d1(inp)
    pdf = math.exp(-0.5 * d1 * d1)
    gamma = pdf / (inp.spot * inp.vol * SQRT_2PI * sqrt_tau)
    speed = -gamma / inp.spot * (1.0 + d1 / sd)
    vega = inp.spot * pdf * sqrt_tau / SQRT_2PI
    return GreekSet(gamma=gamma, speed=speed, vega=vega)


def price_bounds(inp: BsInputs, option_type: "str | OptionType" = OptionType.CALL) -> tuple[float, float]:
    """No-arbitrage band (lower, upper) for a European option."""
    kind = OptionType.parse(option_type)
    pv_strike = inp.strike * inp.discount
    if kind is OptionType.CALL:
        return max(inp.spot - pv_strike, 0.0), inp.spot
    return max(pv_strike - inp.spot, 0.0), pv_strike


def implied_vol(
    price: float,
    inp: BsInputs,
    option_type: "str | OptionType" = OptionType.CALL,
    lower: float = IV_LOWER,
    upper: float = IV_UPPER,
    max_iter: int = IV_MAX_ITER,
) -> float:
    """Invert :func:`bs_price` for volatility.

    ``inp.vol`` is ignored. Bisection on ``[lower, upper]`` with a Newton
    step (using vega) accepted whenever it stays inside the current bracket.
    """
    kind = OptionType.parse(option_type)
    if inp.tau <= 0.0:
        raise DomainError("implied vol undefined at tau = 0")
    lo_bound, hi_bound = price_bounds(inp, kind)
    if not price > lo_bound:
        raise ArbitrageBoundError(
            f"price {price} is not above the lower no-arbitrage bound {lo_bound}", "lower"
        )
    if not price < hi_bound:
        raise ArbitrageBoundError(
            f"price {price} is not below the upper no-arbitrage bound {hi_bound}", "upper"
        )

    def f(sigma: float) -> float:
        return bs_price(inp.with_vol(sigma), kind) - price

    lo, hi = lower, upper
    f_lo, f_hi = f(lo), f(hi)
    if f_lo > 0.0 or f_hi < 0.0:
        raise DomainError(f"no implied vol in [{lower}, {upper}] for price {price}")

    accept = 1e-10 * inp.spot
    sigma = 0.5 * (lo + hi)
    # seed Newton near the inflection point of price in vol
    guess = math.sqrt(2.0 * abs(math.log(inp.spot / inp.strike) + inp.rate * inp.tau) / inp.tau)
    if lo < guess < hi:
        sigma = guess
    for _ in range(max_iter):
        diff = f(sigma)
        if diff > 0.0:
            hi = sigma
        else:
            lo = sigma
        if abs(diff) <= 1e-15 * inp.spot or hi - lo <= 1e-15:
            return sigma
        vega = greeks(inp.with_vol(sigma)).vega
        step = diff / vega if vega > 0.0 else math.inf
        candidate = sigma - step
        if lo < candidate < hi:
            if abs(step) <= 1e-14:
                return candidate
            sigma = candidate
        else:
            sigma = 0.5 * (lo + hi)
    if abs(f(sigma)) <= accept:
        return sigma
    raise DomainError(f"implied vol did not converge in {max_iter} iterations")


def constant_vol_equivalent(
    sigma_sq_fn: Callable[[float], float],
    t: float,
    T: float,
    breakpoints: Sequence[float] | None = None,
) -> float:
    """Root-mean-square volatility over ``[t, T]`` from an instantaneous variance function."""
    if not T > t:
        raise DomainError(f"need T > t, got t={t}, T={T}")
    points = None
    if breakpoints:
        points = [p for p in breakpoints if t < p < T] or None
    integral, _ = integrate.quad(sigma_sq_fn, t, T, epsabs=1e-15, epsrel=1e-10, limit=500, points=points)
    if integral < 0.0:
        raise DomainError("integrated variance is negative")
    return math.sqrt(integral / (T - t))
