"""Markov regime structure, per-regime parameters and the regime calendar.

Regime indices are 1-based everywhere outside of matrix indexing.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import math
import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .ou import OuParams

PROB_TOL = 1e-12


class RegimeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MarkovChain:
    transition: np.ndarray
    initial: np.ndarray

    @property
    def n_regimes(self) -> int:
        return self.transition.shape[0]

    def stationary(self) -> np.ndarray:
        """Left eigenvector of the transition matrix for eigenvalue 1."""
        vals, vecs = np.linalg.eig(self.transition.T)
        k = int(np.argmin(np.abs(vals - 1.0)))
        pi = np.real(vecs[:, k])
        return pi / pi.sum()


def construct_markov_chain(transition, initial) -> MarkovChain:
    A = np.array(transition, dtype=float)
    pi = np.array(initial, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise RegimeError(f"transition matrix must be square, got shape {A.shape}")
    if pi.shape != (A.shape[0],):
        raise RegimeError(f"initial vector has length {pi.size}, expected {A.shape[0]}")
    for i, row in enumerate(A, start=1):
        if np.any(row < 0.0) or np.any(row > 1.0):
            raise RegimeError(f"row {i} of the transition matrix has entries outside [0, 1]")
        if abs(row.sum() - 1.0) > PROB_TOL:
            raise RegimeError(f"row {i} of the transition matrix sums to {row.sum():.12g}, not 1")
    if np.any(pi < 0.0) or np.any(pi > 1.0) or abs(pi.sum() - 1.0) > PROB_TOL:
        raise RegimeError(f"initial distribution {pi.tolist()} is not a probability vector")
    A.setflags(write=False)
    pi.setflags(write=False)
    return MarkovChain(A, pi)


def simulate_regime_sequence(chain: MarkovChain, n_steps: int, seed=None) -> list[int]:
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    rng = np.random.default_rng(seed)
    u = rng.random(n_steps)
    cum_init = np.cumsum(chain.initial)
    cum_rows = np.cumsum(chain.transition, axis=1)
    n = chain.n_regimes

    def draw(cum, ui):
        return min(int(np.searchsorted(cum, ui, side="right")), n - 1)

    state = draw(cum_init, u[0])
    seq = [state + 1]
    for ui in u[1:]:
        state = draw(cum_rows[state], ui)
        seq.append(state + 1)
    return seq


@dataclass(frozen=True)
class RegimeParams:
    regime_index: int
    mu: float
    sigma_bar: float
    ou: OuParams | None = None
    hardy_mean: float = 0.0
    # variance, not standard deviation
    hardy_var: float = 0.0

    def __post_init__(self):
        if not self.sigma_bar > 0:
            raise ValueError(f"sigma_bar must be positive, got {self.sigma_bar}")
        if not self.hardy_var >= 0:
            raise ValueError(f"hardy_var must be non-negative, got {self.hardy_var}")

    def to_dict(self) -> dict:
        return {
            "regime_index": self.regime_index,
            "mu": self.mu,
            "sigma_bar": self.sigma_bar,
            "ou": self.ou.to_dict() if self.ou else None,
            "hardy_mean": self.hardy_mean,
            "hardy_var": self.hardy_var,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "RegimeParams":
        ou = data.get("ou")
        return cls(
            regime_index=int(data["regime_index"]),
            mu=float(data.get("mu", 0.0)),
            sigma_bar=float(data["sigma_bar"]),
            ou=OuParams.from_dict(ou) if ou else None,
            hardy_mean=float(data.get("hardy_mean", 0.0)),
            hardy_var=float(data.get("hardy_var", 0.0)),
        )


def load_regime_params(path: str | os.PathLike) -> dict[int, RegimeParams]:
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise RegimeError("regime parameter file must hold a JSON list")
    params = [RegimeParams.from_dict(item) for item in raw]
    by_index = {p.regime_index: p for p in params}
    if len(by_index) != len(params):
        raise RegimeError("duplicate regime_index in parameter file")
    return by_index


def save_regime_params(params: Sequence[RegimeParams], path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        json.dump([p.to_dict() for p in params], fh, indent=2)


def _add_years(anchor: dt.date, years: float) -> dt.date:
    if float(years).is_integer():
        y = anchor.year + int(years)
        try:
            return anchor.replace(year=y)
        except ValueError:  # 29 Feb
            return anchor.replace(year=y, day=28)
    return anchor + dt.timedelta(days=round(years * 365.0))


@dataclass(frozen=True)
class RegimeCalendar:
    """Regime labels per quote date plus the grid of possible switch dates.

    Switches can only happen at ``anchor + k * switch_interval``. Without an
    explicit anchor the grid starts on 1 January of the earliest labelled year,
    so the default one-year interval means calendar-year boundaries.
    """

    labels: Mapping[dt.date, int] = field(default_factory=dict)
    switch_interval: float = 1.0
    anchor: dt.date | None = None
    n_regimes: int | None = None

    def __post_init__(self):
        if not self.switch_interval > 0:
            raise ValueError("switch_interval must be positive")
        for d, r in self.labels.items():
            if r < 1 or (self.n_regimes is not None and r > self.n_regimes):
                raise RegimeError(f"label for {d} references invalid regime {r}")

    def _anchor(self, date: dt.date) -> dt.date:
        if self.anchor is not None:
            return self.anchor
        first = min(self.labels) if self.labels else date
        return dt.date(first.year, 1, 1)

    def next_switch_date(self, date: dt.date) -> dt.date:
        """First switch boundary strictly after ``date``."""
        anchor = self._anchor(date)
        k = math.floor(_year_fraction(anchor, date) / self.switch_interval)
        while True:
            candidate = _add_years(anchor, k * self.switch_interval)
            if candidate > date:
                return candidate
            k += 1


def _year_fraction(start: dt.date, end: dt.date) -> float:
    return (end - start).days / 365.0


def regime_for_date(calendar: RegimeCalendar, date: dt.date) -> int:
    try:
        return calendar.labels[date]
    except KeyError:
        raise RegimeError(f"no regime label for {date.isoformat()}") from None


def load_regime_labels(path: str | os.PathLike, switch_interval: float = 1.0) -> RegimeCalendar:
    labels = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or {"quote_date", "regime"} - {f.strip() for f in reader.fieldnames}:
            raise RegimeError("regime label file needs columns quote_date,regime")
        reader.fieldnames = [f.strip() for f in reader.fieldnames]
        for lineno, row in enumerate(reader, start=2):
            try:
                labels[dt.date.fromisoformat(row["quote_date"].strip())] = int(row["regime"])
            except (ValueError, AttributeError) as exc:
                raise RegimeError(f"row {lineno}: {exc}") from None
    return RegimeCalendar(labels=labels, switch_interval=switch_interval)


def regime_return_distribution(params: RegimeParams | float, horizon: float, mu: float = 0.0) -> tuple[float, float]:
    """Mean and variance of the log return over ``horizon`` at constant ``sigma_bar``.

    Accepts a :class:`RegimeParams` or a bare ``sigma_bar`` (with ``mu``), so
    that ``sigma_bar = 0`` can be evaluated.
    """
    if isinstance(params, RegimeParams):
        sigma, mu = params.sigma_bar, params.mu
    else:
        sigma = float(params)
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    return (mu - 0.5 * sigma**2) * horizon, sigma**2 * horizon
