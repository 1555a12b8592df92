"""Ornstein-Uhlenbeck driver of the log-volatility.

    dY = alpha * (m - Y) dt + beta dW

Transitions are sampled exactly from the Gaussian law of Y(t) given Y(0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class OuParams:
    alpha: float
    m: float
    beta: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.beta >= 0:
            raise ValueError(f"beta must be non-negative, got {self.beta}")

    @property
    def epsilon(self) -> float:
        return 1.0 / self.alpha

    @property
    def nu_sq(self) -> float:
        """Variance of the invariant distribution N(m, beta^2 / (2 alpha))."""
        return self.beta**2 / (2.0 * self.alpha)

    @property
    def effective_vol(self) -> float:
        """sqrt(E[exp(2Y)]) under the invariant law, for sigma = exp(Y)."""
        return math.exp(self.m + self.nu_sq)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "m": self.m, "beta": self.beta}

    @classmethod
    def from_dict(cls, data: dict) -> "OuParams":
        return cls(alpha=float(data["alpha"]), m=float(data["m"]), beta=float(data["beta"]))


def transition_moments(params: OuParams, y0, t: float):
    """Mean and variance of Y(t) given Y(0) = y0."""
    decay = math.exp(-params.alpha * t)
    # written so that t = 0 returns y0 bit-for-bit
    mean = np.asarray(y0, dtype=float) * decay + params.m * -math.expm1(-params.alpha * t)
    # -expm1 keeps precision for small alpha*t
    var = params.nu_sq * -math.expm1(-2.0 * params.alpha * t)
    return mean, var


def ou_step(params: OuParams, y, dt: float, z):
    """Advance Y by ``dt`` using standard normal draws ``z`` (exact)."""
    mean, var = transition_moments(params, y, dt)
    return mean + math.sqrt(var) * z


def ou_exact_sample(params: OuParams, y0: float, t: float, draws: int, seed=None) -> np.ndarray:
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(draws)
    return ou_step(params, np.full(draws, float(y0)), t, z)
