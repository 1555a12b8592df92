"""Shared fixtures and independent oracles."""

import datetime as dt

import mpmath as mp
import pytest

from regimevol.black_scholes import BsInputs, bs_price
from regimevol.market_data import OptionChain, OptionQuote

QUOTE_DATE = dt.date(2003, 4, 29)


def mp_call(spot, strike, rate, vol, tau, dps=50):
    """Black-Scholes call in arbitrary precision, written from scratch with mpmath."""
    with mp.workdps(dps):
        x, k, r, s, t = (mp.mpf(v) for v in (spot, strike, rate, vol, tau))
        srt = s * mp.sqrt(t)
        d1 = (mp.log(x / k) + (r + s * s / 2) * t) / srt
        d2 = d1 - srt
        return x * mp.ncdf(d1) - k * mp.exp(-r * t) * mp.ncdf(d2)


def flat_chain(spot, rate, vol, strikes, expiries, quote_date=QUOTE_DATE):
    """Chain whose mid prices are Black-Scholes prices at a single volatility."""
    quotes = []
    for T in expiries:
        for K in strikes:
            p = bs_price(BsInputs(spot, K, rate, vol, T))
            quotes.append(OptionQuote(quote_date, T, K, p, p))
    return OptionChain(quote_date, spot, rate, quotes)


@pytest.fixture
def chain_csv(tmp_path):
    def write(rows, name="chain.csv"):
        path = tmp_path / name
        path.write_text("quote_date,expiry_years,strike,bid,ask,type\n" + "\n".join(rows) + "\n")
        return path

    return write


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number, title, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
