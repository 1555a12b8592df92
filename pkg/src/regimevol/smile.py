"""Affine implied-volatility smile fit and extraction of the correction coefficients.

The implied volatility of a fast mean-reverting stochastic volatility model is,
to first order, affine in the log-moneyness-to-maturity ratio
``L = log(K/x) / tau``::

    I = a * L + b

From the slope ``a``, intercept ``b``, effective volatility ``sigma_bar`` and
rate ``r`` the two correction coefficients follow as::

    v3 = -a * sigma_bar**3
    v2 = sigma_bar * ((sigma_bar - b) - a * (r + 1.5 * sigma_bar**2))
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import asdict, dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .black_scholes import BsInputs, greeks, implied_vol
from .market_data import OptionChain

log = logging.getLogger(__name__)


class CalibrationError(ValueError):
    pass


class SkippedQuoteWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SmilePoint:
    lmmr: float
    implied_vol: float
    weight: float = 1.0

    def __post_init__(self):
        if not self.implied_vol > 0:
            raise ValueError(f"implied vol must be positive, got {self.implied_vol}")


class AffineFit(NamedTuple):
    a: float
    b: float
    residual_rms: float


@dataclass(frozen=True)
class SmileFit:
    a: float
    b: float
    sigma_bar: float
    rate: float
    v2: float
    v3: float
    residual_rms: float
    n_points: int

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "SmileFit":
        return cls(
            a=float(data["a"]),
            b=float(data["b"]),
            sigma_bar=float(data["sigma_bar"]),
            rate=float(data["rate"]),
            v2=float(data["v2"]),
            v3=float(data["v3"]),
            residual_rms=float(data.get("residual_rms", 0.0)),
            n_points=int(data.get("n_points", 0)),
        )

    @classmethod
    def from_json(cls, text: str) -> "SmileFit":
        return cls.from_dict(json.loads(text))

    def with_sigma_bar(self, sigma_bar: float) -> "SmileFit":
        """Same (a, b), coefficients recomputed for another effective volatility."""
        v2, v3 = coefficients_from_fit(self.a, self.b, sigma_bar, self.rate)
        return SmileFit(self.a, self.b, sigma_bar, self.rate, v2, v3, self.residual_rms, self.n_points)


def lmmr(strike: float, spot: float, tau: float) -> float:
    return math.log(strike / spot) / tau


def compute_smile_points(chain: OptionChain, vega_weighted: bool = False) -> list[SmilePoint]:
    """One (L, implied vol) point per quote, from the quote's mid price.

    Quotes whose mid price cannot be inverted are skipped with a
    :class:`SkippedQuoteWarning`.
    """
    if len(chain) == 0:
        raise CalibrationError("no quotes to calibrate")
    points = []
    skipped = []
    for q in chain.quotes:
        inp = BsInputs(chain.spot, q.strike, chain.rate, 0.0, q.expiry)
        try:
            iv = implied_vol(q.mid, inp, q.option_type)
        except ValueError as exc:
            skipped.append((q, str(exc)))
            continue
        weight = greeks(inp.with_vol(iv)).vega if vega_weighted else 1.0
        points.append(SmilePoint(lmmr(q.strike, chain.spot, q.expiry), iv, weight))
    if skipped:
        detail = "; ".join(f"K={q.strike} T={q.expiry}: {msg}" for q, msg in skipped)
        warnings.warn(f"skipped {len(skipped)} quote(s): {detail}", SkippedQuoteWarning, stacklevel=2)
    if not points:
        raise CalibrationError("implied vol inversion failed for every quote")
    return points


def fit_affine(points: Sequence[SmilePoint], weighted: bool = False) -> AffineFit:
    """Least-squares line through (L, implied vol); unweighted unless ``weighted``."""
    x = np.array([p.lmmr for p in points], dtype=float)
    y = np.array([p.implied_vol for p in points], dtype=float)
    if len(np.unique(x)) < 2:
        raise CalibrationError("degenerate design: need at least 2 distinct L values")
    w = np.array([p.weight for p in points], dtype=float) if weighted else np.ones_like(x)
    sw = np.sqrt(w)
    design = np.column_stack([x, np.ones_like(x)])
    (a, b), *_ = np.linalg.lstsq(design * sw[:, None], y * sw, rcond=None)
    resid = y - (a * x + b)
    rms = float(np.sqrt(np.sum(w * resid**2) / np.sum(w)))
    return AffineFit(float(a), float(b), rms)


def coefficients_from_fit(a: float, b: float, sigma_bar: float, rate: float) -> tuple[float, float]:
    if not sigma_bar > 0:
        raise ValueError(f"sigma_bar must be positive, got {sigma_bar}")
    v3 = -a * sigma_bar**3
    v2 = sigma_bar * ((sigma_bar - b) - a * (rate + 1.5 * sigma_bar**2))
    return v2, v3


def fit_from_coefficients(v2: float, v3: float, sigma_bar: float, rate: float) -> tuple[float, float]:
    """Slope and intercept implied by given coefficients (inverse of :func:`coefficients_from_fit`)."""
    a = -v3 / sigma_bar**3
    b = sigma_bar + v3 / sigma_bar**3 * (rate + 1.5 * sigma_bar**2) - v2 / sigma_bar
    return a, b


def calibrate(chain: OptionChain, sigma_bar: float, vega_weighted: bool = False) -> SmileFit:
    """Fit the smile of one quote date and derive (v2, v3) at ``sigma_bar``."""
    points = compute_smile_points(chain, vega_weighted=vega_weighted)
    line = fit_affine(points, weighted=vega_weighted)
    v2, v3 = coefficients_from_fit(line.a, line.b, sigma_bar, chain.rate)
    log.debug("calibrated %s: a=%.6g b=%.6g v2=%.6g v3=%.6g", chain.quote_date, line.a, line.b, v2, v3)
    return SmileFit(line.a, line.b, sigma_bar, chain.rate, v2, v3, line.residual_rms, len(points))


def calibrate_regime(
    chain: OptionChain,
    sigma_bar_i: float,
    base: SmileFit | None = None,
    refit: bool = True,
    vega_weighted: bool = False,
) -> SmileFit:
    """Regime calibration: refit the chain with ``sigma_bar_i``, or reuse ``base``'s line."""
    if refit or base is None:
        return calibrate(chain, sigma_bar_i, vega_weighted=vega_weighted)
    return base.with_sigma_bar(sigma_bar_i)
