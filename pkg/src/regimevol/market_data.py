"""Option-chain ingestion, mid prices and liquidity filters."""

from __future__ import annotations

import csv
import datetime as dt
import io
import os
from dataclasses import dataclass, field
from typing import Iterable

from .black_scholes import OptionType

CHAIN_COLUMNS = ("quote_date", "expiry_years", "strike", "bid", "ask", "type")

DEFAULT_MONEYNESS_BAND = 0.03
DEFAULT_MIN_EXPIRY = 21.0 / 365.0
# quotes sitting exactly on a band edge are kept despite float rounding
_EDGE_TOL = 1e-12


class ChainParseError(ValueError):
    def __init__(self, message: str, row: int | None = None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


@dataclass(frozen=True)
class OptionQuote:
    quote_date: dt.date
    expiry: float
    strike: float
    bid: float
    ask: float
    option_type: OptionType = OptionType.CALL

    def __post_init__(self):
        object.__setattr__(self, "option_type", OptionType.parse(self.option_type))
        if not self.bid >= 0:
            raise ValueError(f"bid must be non-negative, got {self.bid}")
        if not self.ask >= self.bid:
            raise ValueError(f"ask {self.ask} is below bid {self.bid}")
        if not self.strike > 0:
            raise ValueError(f"strike must be positive, got {self.strike}")
        if not self.expiry > 0:
            raise ValueError(f"expiry must be positive, got {self.expiry}")

    @property
    def mid(self) -> float:
        return mid_price(self)


@dataclass(frozen=True)
class OptionChain:
    quote_date: dt.date
    spot: float
    rate: float
    quotes: tuple[OptionQuote, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "quotes", tuple(self.quotes))
        if not self.spot > 0:
            raise ValueError(f"spot must be positive, got {self.spot}")
        for q in self.quotes:
            if q.quote_date != self.quote_date:
                raise ValueError(
                    f"quote dated {q.quote_date} does not belong to chain dated {self.quote_date}"
                )

    def __len__(self) -> int:
        return len(self.quotes)

    def __iter__(self):
        return iter(self.quotes)


@dataclass(frozen=True)
class FilterResult:
    chain: OptionChain
    dropped: dict[str, int] = field(default_factory=dict)


def mid_price(q: OptionQuote) -> float:
    return 0.5 * (q.bid + q.ask)


def _parse_rows(reader: Iterable[dict]) -> list[OptionQuote]:
    quotes = []
    # header is line 1, so data rows start at 2
    for lineno, row in enumerate(reader, start=2):
        try:
            quotes.append(
                OptionQuote(
                    quote_date=dt.date.fromisoformat(row["quote_date"].strip()),
                    expiry=float(row["expiry_years"]),
                    strike=float(row["strike"]),
                    bid=float(row["bid"]),
                    ask=float(row["ask"]),
                    option_type=row["type"],
                )
            )
        except (TypeError, ValueError, AttributeError) as exc:
            raise ChainParseError(str(exc), row=lineno) from None
    return quotes


def parse_chain(text: str, spot: float, rate: float) -> OptionChain:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise ChainParseError("empty file: header required")
    missing = [c for c in CHAIN_COLUMNS if c not in [f.strip() for f in reader.fieldnames]]
    if missing:
        raise ChainParseError(f"missing columns: {', '.join(missing)}", row=1)
    reader.fieldnames = [f.strip() for f in reader.fieldnames]
    quotes = _parse_rows(reader)
    if not quotes:
        raise ChainParseError("chain file has no quotes")
    dates = {q.quote_date for q in quotes}
    if len(dates) > 1:
        first = quotes[0].quote_date
        bad = next(i for i, q in enumerate(quotes, start=2) if q.quote_date != first)
        raise ChainParseError(f"mixed quote dates {sorted(dates)}", row=bad)
    return OptionChain(quote_date=quotes[0].quote_date, spot=spot, rate=rate, quotes=quotes)


def load_chain(path: str | os.PathLike, spot: float, rate: float) -> OptionChain:
    with open(path, newline="") as fh:
        return parse_chain(fh.read(), spot, rate)


def dump_chain(chain: OptionChain) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CHAIN_COLUMNS)
    for q in chain.quotes:
        writer.writerow(
            [q.quote_date.isoformat(), repr(q.expiry), repr(q.strike), repr(q.bid), repr(q.ask), q.option_type.value]
        )
    return buf.getvalue()


def save_chain(chain: OptionChain, path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(dump_chain(chain))


def filter_chain(
    chain: OptionChain,
    moneyness_band: float = DEFAULT_MONEYNESS_BAND,
    min_expiry: float = DEFAULT_MIN_EXPIRY,
) -> FilterResult:
    """Keep near-the-money quotes with enough time to expiry.

    A quote is dropped for moneyness when ``|strike/spot - 1| > moneyness_band``
    and for expiry when ``expiry < min_expiry``. A quote failing both rules
    counts once, under moneyness.
    """
    kept = []
    dropped = {"moneyness": 0, "expiry": 0}
    for q in chain.quotes:
        if abs(q.strike / chain.spot - 1.0) > moneyness_band + _EDGE_TOL:
            dropped["moneyness"] += 1
        elif q.expiry < min_expiry - _EDGE_TOL:
            dropped["expiry"] += 1
        else:
            kept.append(q)
    out = OptionChain(quote_date=chain.quote_date, spot=chain.spot, rate=chain.rate, quotes=kept)
    return FilterResult(chain=out, dropped=dropped)
