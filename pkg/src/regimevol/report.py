"""Pricing reports: three-method comparison tables and error metrics."""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
import os
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Sequence

import numpy as np

from .market_data import OptionChain
from .pricer import Model, RegimePricingContext, price_with_model
from .smile import SmileFit

PRICE_DECIMALS = 1
ERROR_DECIMALS = 1

REPLAY_NOTE = (
    "Only the error metrics are recomputed. Model price columns cannot be re-derived: "
    "the spot level and interest rate for each quote date were not published."
)
GAMMA_NOTE = (
    "Monte Carlo prices use gamma = 0 (zero market price of volatility risk); "
    "market-calibrated coefficients absorb a nonzero gamma, so simulated and "
    "calibrated worlds need not coincide."
)

TABLE_COLUMNS = ("expiry", "strike", "empirical", "bs", "standard", "regime")
PLOT_COLUMNS = ("strike", "empirical", "black_scholes", "fouque_standard", "fouque_regime")


class ReportError(ValueError):
    pass


def average_pct_error(observed: Sequence[float], model: Sequence[float]) -> float:
    """Mean absolute relative error, in percent."""
    obs = np.asarray(observed, dtype=float)
    mod = np.asarray(model, dtype=float)
    if obs.shape != mod.shape:
        raise ReportError(f"length mismatch: {obs.size} observed vs {mod.size} model prices")
    if obs.size == 0:
        raise ReportError("no prices to compare")
    if np.any(obs <= 0.0):
        raise ReportError("observed prices must be positive")
    return float(100.0 * np.mean(np.abs(obs - mod) / obs))


@dataclass(frozen=True)
class ReportRow:
    expiry: float
    strike: float
    observed_price: float
    bs_price: float | None
    fouque_standard_price: float | None
    fouque_regime_price: float | None

    def price(self, model: Model) -> float | None:
        return {
            Model.BLACK_SCHOLES: self.bs_price,
            Model.FOUQUE_STANDARD: self.fouque_standard_price,
            Model.FOUQUE_REGIME: self.fouque_regime_price,
        }[model]


@dataclass(frozen=True)
class PricingReport:
    quote_date: dt.date | None
    rows: tuple[ReportRow, ...]
    avg_pct_error: tuple[float | None, float | None, float | None]
    regime_used: int | None = None
    sigma_bars: tuple[float | None, float | None] = (None, None)
    notes: tuple[str, ...] = field(default_factory=tuple)

    def error(self, model: Model) -> float | None:
        return self.avg_pct_error[list(Model).index(model)]

    def to_dict(self) -> dict:
        def rp(x):
            return None if x is None else round(x, PRICE_DECIMALS)

        def re_(x):
            return None if x is None else round(x, ERROR_DECIMALS)

        return {
            "quote_date": self.quote_date.isoformat() if self.quote_date else None,
            "regime_used": self.regime_used,
            "sigma_bars": {"global": self.sigma_bars[0], "regime": self.sigma_bars[1]},
            "rows": [
                {
                    "expiry": r.expiry,
                    "strike": r.strike,
                    "observed_price": rp(r.observed_price),
                    "bs_price": rp(r.bs_price),
                    "fouque_standard_price": rp(r.fouque_standard_price),
                    "fouque_regime_price": rp(r.fouque_regime_price),
                }
                for r in self.rows
            ],
            "avg_pct_error": {
                "bs": re_(self.avg_pct_error[0]),
                "standard": re_(self.avg_pct_error[1]),
                "regime": re_(self.avg_pct_error[2]),
            },
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        d = self.to_dict()

        def cell(x, width=10):
            return f"{'-':>{width}}" if x is None else f"{x:>{width}.{PRICE_DECIMALS}f}"

        lines = []
        if d["quote_date"]:
            lines.append(f"Quote date: {d['quote_date']}")
        if self.regime_used is not None:
            lines.append(f"Regime: {self.regime_used}")
        g, r = self.sigma_bars
        if g is not None or r is not None:
            lines.append(
                "sigma_bar: global={} regime={}".format(
                    "-" if g is None else f"{g:.4f}", "-" if r is None else f"{r:.4f}"
                )
            )
        header = f"{'Expiry':>8}{'Strike':>10}{'Empirical':>10}{'BS':>10}{'Standard':>10}{'Regime':>10}"
        lines.append(header)
        lines.append("-" * len(header))
        for row in d["rows"]:
            lines.append(
                f"{row['expiry']:>8.2f}{row['strike']:>10g}"
                + cell(row["observed_price"])
                + cell(row["bs_price"])
                + cell(row["fouque_standard_price"])
                + cell(row["fouque_regime_price"])
            )
        lines.append("-" * len(header))
        errs = d["avg_pct_error"]

        def ecell(x):
            return f"{'-':>10}" if x is None else f"{x:>9.{ERROR_DECIMALS}f}%"

        lines.append(f"{'Avg % error':>28}" + ecell(errs["bs"]) + ecell(errs["standard"]) + ecell(errs["regime"]))
        lines.extend(f"Note: {n}" for n in self.notes)
        return "\n".join(lines) + "\n"


def _errors(rows: Sequence[ReportRow]) -> tuple:
    obs = [r.observed_price for r in rows]
    out = []
    for model in Model:
        prices = [r.price(model) for r in rows]
        out.append(None if any(p is None for p in prices) else average_pct_error(obs, prices))
    return tuple(out)


def build_report(
    chain: OptionChain,
    fit: SmileFit | None,
    regime_ctx: RegimePricingContext | None = None,
    modes: Iterable["Model | str"] = tuple(Model),
    notes: Sequence[str] = (),
) -> PricingReport:
    """One row per quote priced by each requested method, plus error metrics.

    ``fit`` is the global calibration (used for Black-Scholes and standard
    pricing); ``regime_ctx`` carries the regime calibration.
    """
    modes = [Model(m) for m in modes]
    if len(chain) == 0:
        raise ReportError("no quotes after filtering")
    if fit is None and any(m in (Model.BLACK_SCHOLES, Model.FOUQUE_STANDARD) for m in modes):
        raise ReportError("Black-Scholes and standard pricing need a global fit")
    if regime_ctx is None and Model.FOUQUE_REGIME in modes:
        raise ReportError("regime pricing needs a regime fit and context")
    rows = []
    for q in chain.quotes:
        prices = {}
        for m in modes:
            prices[m] = price_with_model(q, m, fit, chain.spot, chain.rate, ctx=regime_ctx).total
        rows.append(
            ReportRow(
                expiry=q.expiry,
                strike=q.strike,
                observed_price=q.mid,
                bs_price=prices.get(Model.BLACK_SCHOLES),
                fouque_standard_price=prices.get(Model.FOUQUE_STANDARD),
                fouque_regime_price=prices.get(Model.FOUQUE_REGIME),
            )
        )
    return PricingReport(
        quote_date=chain.quote_date,
        rows=tuple(rows),
        avg_pct_error=_errors(rows),
        regime_used=regime_ctx.regime_index if regime_ctx else None,
        sigma_bars=(fit.sigma_bar if fit else None, regime_ctx.sigma_bar_i if regime_ctx else None),
        notes=tuple(notes),
    )


def read_table(source: "str | os.PathLike | io.TextIOBase") -> list[ReportRow]:
    """Read printed prices in ``expiry,strike,empirical,bs,standard,regime`` form."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="") as fh:
            return read_table(fh)
    reader = csv.DictReader(source)
    if reader.fieldnames is None or set(TABLE_COLUMNS) - {f.strip() for f in reader.fieldnames}:
        raise ReportError(f"table needs columns {','.join(TABLE_COLUMNS)}")
    reader.fieldnames = [f.strip() for f in reader.fieldnames]
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        try:
            rows.append(
                ReportRow(
                    expiry=float(rec["expiry"]),
                    strike=float(rec["strike"]),
                    observed_price=float(rec["empirical"]),
                    bs_price=float(rec["bs"]),
                    fouque_standard_price=float(rec["standard"]),
                    fouque_regime_price=float(rec["regime"]),
                )
            )
        except (TypeError, ValueError) as exc:
            raise ReportError(f"row {lineno}: {exc}") from None
    if not rows:
        raise ReportError("table has no rows")
    return rows


def replay_table(
    rows: Sequence[ReportRow], quote_date: dt.date | None = None, regime: int | None = None
) -> PricingReport:
    """Recompute the three average percentage errors from printed price columns."""
    return PricingReport(
        quote_date=quote_date,
        rows=tuple(rows),
        avg_pct_error=_errors(rows),
        regime_used=regime,
        notes=(REPLAY_NOTE,),
    )


@dataclass(frozen=True)
class ReferenceTable:
    number: int
    quote_date: dt.date
    regime: int
    printed_error_pct: dict
    rows: tuple[ReportRow, ...]


def reference_tables() -> list[ReferenceTable]:
    """Published S&P 500 call-option results shipped with the package (8 quote dates)."""
    base = resources.files("regimevol") / "data"
    index = json.loads((base / "tables.json").read_text())
    out = []
    for item in index:
        rows = read_table(io.StringIO((base / item["file"]).read_text()))
        out.append(
            ReferenceTable(
                number=item["table"],
                quote_date=dt.date.fromisoformat(item["quote_date"]),
                regime=item["regime"],
                printed_error_pct=item["printed_error_pct"],
                rows=tuple(rows),
            )
        )
    return out


def emit_plot_data(report: PricingReport, expiry: float, out: "str | os.PathLike") -> int:
    """Write the rows at one expiry, sorted by strike. Returns the row count."""
    rows = sorted((r for r in report.rows if abs(r.expiry - expiry) < 1e-9), key=lambda r: r.strike)
    if not rows:
        raise ReportError(f"no rows at expiry {expiry}")

    def fmt(x):
        return "" if x is None else repr(float(x))

    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PLOT_COLUMNS)
        for r in rows:
            writer.writerow(
                [fmt(r.strike), fmt(r.observed_price), fmt(r.bs_price), fmt(r.fouque_standard_price), fmt(r.fouque_regime_price)]
            )
    return len(rows)


def read_plot_data(path: "str | os.PathLike", expiry: float) -> list[ReportRow]:
    def val(s):
        return None if s == "" else float(s)

    with open(path, newline="") as fh:
        return [
            ReportRow(
                expiry=expiry,
                strike=float(rec["strike"]),
                observed_price=float(rec["empirical"]),
                bs_price=val(rec["black_scholes"]),
                fouque_standard_price=val(rec["fouque_standard"]),
                fouque_regime_price=val(rec["fouque_regime"]),
            )
            for rec in csv.DictReader(fh)
        ]
