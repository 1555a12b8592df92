"""Monte Carlo engine for exponential-OU and regime-switching exponential-OU volatility.

Within regime i::

    dX / X = drift dt + sigma dW1,    sigma = exp(Y)
    dY     = alpha_i (m_i - Y) dt + beta_i dW2
    dW2    = rho dW1 + sqrt(1 - rho^2) dW*

Y is advanced with its exact Gaussian transition (jointly with the Brownian
increment it is correlated with); log X uses an Euler step with sigma frozen
at the left end of each step. Paths are generated in fixed-size blocks, each
with its own random stream keyed by (seed, block index), so output does not
depend on the number of worker threads.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .black_scholes import OptionType
from .ou import OuParams
from .regimes import RegimeCalendar, RegimeParams

BLOCK_SIZE = 1024

RISK_NEUTRAL = "risk_neutral"
PHYSICAL = "physical"


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    n_paths: int
    n_steps: int
    horizon: float
    rho: float = 0.0
    seed: int = 0
    gamma_mpvr: float = 0.0

    def __post_init__(self):
        if self.n_paths < 1 or self.n_steps < 1:
            raise ValueError("n_paths and n_steps must be at least 1")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [-1, 1], got {self.rho}")

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps


def default_n_steps(horizon: float, max_dt: float = 1.0 / 2520.0) -> int:
    return max(1, math.ceil(horizon / max_dt - 1e-9))


@dataclass(frozen=True, eq=False)
class PathBundle:
    times: np.ndarray
    asset_paths: np.ndarray
    vol_paths: np.ndarray
    y_paths: np.ndarray
    measure: str
    rate: float
    steps: np.ndarray

    @property
    def n_paths(self) -> int:
        return self.asset_paths.shape[0]

    def column(self, horizon: float) -> int:
        idx = int(np.argmin(np.abs(self.times - horizon)))
        if abs(self.times[idx] - horizon) > 1e-9 * max(1.0, horizon):
            raise SimulationError(f"no recorded time at horizon {horizon}; recorded {self.times.tolist()[:8]}...")
        return idx


def correlated_increments(rng: np.random.Generator, n: int, dt: float, rho: float):
    """Brownian increments (dW1, dW2, dW*) with corr(dW1, dW2) = rho."""
    sq = math.sqrt(dt)
    dw1 = rng.standard_normal(n) * sq
    dws = rng.standard_normal(n) * sq
    dw2 = rho * dw1 + math.sqrt(max(0.0, 1.0 - rho * rho)) * dws
    return dw1, dw2, dws


def _risk_neutral_ou(ou: OuParams, rho: float, gamma: float) -> OuParams:
    if gamma == 0.0:
        return ou
    shift = ou.beta * gamma * math.sqrt(max(0.0, 1.0 - rho * rho)) / ou.alpha
    return OuParams(alpha=ou.alpha, m=ou.m - shift, beta=ou.beta)


def _step_regimes(
    regime_seq: Sequence[int], switch_interval: float, cfg: SimConfig
) -> np.ndarray:
    n_periods = math.ceil(cfg.horizon / switch_interval - 1e-12)
    if len(regime_seq) < n_periods:
        raise SimulationError(
            f"regime sequence covers {len(regime_seq)} period(s) of {switch_interval}y "
            f"but the horizon {cfg.horizon}y needs {n_periods}"
        )
    t_left = np.arange(cfg.n_steps) * cfg.dt
    period = np.floor(t_left / switch_interval + 1e-12).astype(int)
    return np.asarray(regime_seq, dtype=int)[period]


def _record_steps(n_steps: int, record_every: int, extra: Sequence[int] = ()) -> np.ndarray:
    steps = set(range(0, n_steps + 1, record_every)) | {n_steps} | set(extra)
    return np.array(sorted(steps), dtype=int)


def _simulate_block(
    block: int,
    n: int,
    cfg: SimConfig,
    step_params: Sequence[tuple],
    y0: float,
    spot0: float,
    rec: np.ndarray,
):
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(block,)))
    dt = cfg.dt

    out_x = np.empty((n, rec.size))
    out_y = np.empty((n, rec.size))
    logx = np.full(n, math.log(spot0))
    y = np.full(n, float(y0))
    j = 0
    if rec[0] == 0:
        out_x[:, 0] = spot0
        out_y[:, 0] = y
        j = 1
    for k in range(cfg.n_steps):
        decay, mean_shift, sd_cond, load, drift = step_params[k]
        dw1, dw2, _ = correlated_increments(rng, n, dt, cfg.rho)
        z = rng.standard_normal(n)
        sigma = np.exp(y)
        logx += (drift - 0.5 * sigma * sigma) * dt + sigma * dw1
        # exact OU update: mean, part explained by dW2, independent remainder
        y = mean_shift + decay * y + load * dw2 + sd_cond * z
        if j < rec.size and rec[j] == k + 1:
            out_x[:, j] = np.exp(logx)
            out_y[:, j] = y
            j += 1
    return out_x, out_y


def _step_parameters(ou: OuParams, dt: float, drift: float) -> tuple:
    a = ou.alpha
    decay = math.exp(-a * dt)
    var = ou.nu_sq * -math.expm1(-2.0 * a * dt)
    # covariance of the OU noise integral with the dW2 increment
    cov = ou.beta * -math.expm1(-a * dt) / a
    load = cov / dt
    sd_cond = math.sqrt(max(0.0, var - cov * cov / dt))
    return decay, ou.m * (1.0 - decay), sd_cond, load, drift


def simulate_rsexpou_paths(
    regimes: Mapping[int, RegimeParams] | Sequence[RegimeParams],
    regime_seq: Sequence[int],
    calendar: RegimeCalendar,
    cfg: SimConfig,
    spot0: float,
    rate: float,
    y0: float | None = None,
    measure: str = RISK_NEUTRAL,
    record_every: int = 1,
    record_times: Sequence[float] = (),
    n_workers: int = 1,
) -> PathBundle:
    """Simulate asset, volatility and driver paths under regime switching.

    ``regime_seq`` holds one 1-based regime index per calendar period of
    ``calendar.switch_interval`` years, starting at time 0. ``record_every``
    thins the stored grid (the final step is always stored); ``record_times``
    adds the nearest grid steps to the stored set.
    """
    if measure not in (RISK_NEUTRAL, PHYSICAL):
        raise ValueError(f"unknown measure {measure!r}")
    if record_every < 1:
        raise ValueError("record_every must be at least 1")
    if not isinstance(regimes, Mapping):
        regimes = {p.regime_index: p for p in regimes}
    for r in set(regime_seq):
        if r not in regimes:
            raise SimulationError(f"regime {r} in the sequence has no parameters")
        if regimes[r].ou is None:
            raise SimulationError(f"regime {r} has no OU parameters")

    per_step = _step_regimes(regime_seq, calendar.switch_interval, cfg)
    cache = {}
    step_params = []
    for r in per_step:
        if r not in cache:
            p = regimes[r]
            ou = p.ou
            drift = rate if measure == RISK_NEUTRAL else p.mu
            if measure == RISK_NEUTRAL:
                ou = _risk_neutral_ou(ou, cfg.rho, cfg.gamma_mpvr)
            cache[r] = _step_parameters(ou, cfg.dt, drift)
        step_params.append(cache[r])
    if y0 is None:
        y0 = regimes[int(per_step[0])].ou.m

    extra = [int(round(t / cfg.dt)) for t in record_times]
    if any(s < 0 or s > cfg.n_steps for s in extra):
        raise SimulationError("record_times must lie inside [0, horizon]")
    rec = _record_steps(cfg.n_steps, record_every, extra)

    blocks = [(b, min(BLOCK_SIZE, cfg.n_paths - b * BLOCK_SIZE)) for b in range(math.ceil(cfg.n_paths / BLOCK_SIZE))]

    def run(spec):
        return _simulate_block(spec[0], spec[1], cfg, step_params, y0, spot0, rec)

    if n_workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]

    asset = np.concatenate([p[0] for p in parts], axis=0)
    ypaths = np.concatenate([p[1] for p in parts], axis=0)
    return PathBundle(
        times=rec * cfg.dt,
        asset_paths=asset,
        vol_paths=np.exp(ypaths),
        y_paths=ypaths,
        measure=measure,
        rate=rate,
        steps=rec,
    )


def simulate_expou_paths(
    ou: OuParams,
    cfg: SimConfig,
    spot0: float,
    rate: float,
    y0: float | None = None,
    mu: float = 0.0,
    **kwargs,
) -> PathBundle:
    """Single-regime convenience wrapper around :func:`simulate_rsexpou_paths`."""
    params = RegimeParams(regime_index=1, mu=mu, sigma_bar=ou.effective_vol, ou=ou)
    calendar = RegimeCalendar(switch_interval=cfg.horizon)
    return simulate_rsexpou_paths({1: params}, [1], calendar, cfg, spot0, rate, y0=y0, **kwargs)


def ergodic_sigma_bar(vol_path, dt: float) -> float:
    """Root of the time-averaged squared volatility along one path (trapezoidal rule)."""
    v = np.asarray(vol_path, dtype=float)
    if v.size < 2:
        raise ValueError("need at least 2 points on the path")
    sq = v * v
    total = dt * (0.5 * sq[0] + sq[1:-1].sum() + 0.5 * sq[-1])
    return math.sqrt(total / (dt * (v.size - 1)))


def sigma_bar_from_returns(log_returns, dt: float) -> float:
    r = np.asarray(log_returns, dtype=float)
    if r.size < 2:
        raise ValueError("need at least 2 returns")
    if not dt > 0:
        raise ValueError("dt must be positive")
    return float(np.std(r, ddof=1) / math.sqrt(dt))


def mc_option_price(
    bundle: PathBundle,
    strike: float,
    rate: float | None = None,
    horizon: float | None = None,
    option_type: "str | OptionType" = OptionType.CALL,
) -> tuple[float, float]:
    """Discounted mean payoff and its standard error."""
    if bundle.measure != RISK_NEUTRAL:
        raise SimulationError("option prices need paths simulated under the risk-neutral measure")
    rate = bundle.rate if rate is None else rate
    col = bundle.asset_paths.shape[1] - 1 if horizon is None else bundle.column(horizon)
    horizon = float(bundle.times[col])
    terminal = bundle.asset_paths[:, col]
    if OptionType.parse(option_type) is OptionType.CALL:
        payoff = np.maximum(terminal - strike, 0.0)
    else:
        payoff = np.maximum(strike - terminal, 0.0)
    disc = math.exp(-rate * horizon)
    n = payoff.size
    price = disc * float(payoff.mean())
    se = disc * float(payoff.std(ddof=1)) / math.sqrt(n) if n > 1 else float("nan")
    return price, se


def dump_paths(bundle: PathBundle, path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["path_id", "step", "time", "asset", "sigma", "y"])
        for i in range(bundle.n_paths):
            for j, step in enumerate(bundle.steps):
                writer.writerow(
                    [
                        i,
                        int(step),
                        repr(float(bundle.times[j])),
                        repr(float(bundle.asset_paths[i, j])),
                        repr(float(bundle.vol_paths[i, j])),
                        repr(float(bundle.y_paths[i, j])),
                    ]
                )
