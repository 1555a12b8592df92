import datetime as dt

import pytest
from hypothesis import given
from hypothesis import strategies as st

from regimevol.market_data import (
    ChainParseError,
    OptionChain,
    OptionQuote,
    dump_chain,
    filter_chain,
    load_chain,
    mid_price,
    parse_chain,
)

D = dt.date(2003, 4, 29)


def test_load_two_rows(chain_csv):
    path = chain_csv(["2003-04-29,0.14,890,43.0,43.6,call", "2003-04-29,0.39,900,50,51,put"])
    chain = load_chain(path, spot=900.0, rate=0.02)
    assert len(chain) == 2
    assert chain.quote_date == D
    assert [q.strike for q in chain] == [890.0, 900.0]
    assert chain.quotes[1].option_type.value == "put"


def test_table_row_mid_matches_empirical_price(chain_csv):
    chain = load_chain(chain_csv(["2003-04-29,0.14,890,43.0,43.6,call"]), 900.0, 0.0)
    # printed empirical price for this row is 43.3
    assert chain.quotes[0].mid == pytest.approx(43.3, abs=1e-12)


def test_bid_above_ask_names_row(chain_csv):
    path = chain_csv(["2003-04-29,0.14,890,43.0,43.6,call", "2003-04-29,0.14,900,5.0,4.0,call"])
    with pytest.raises(ChainParseError, match="row 3") as exc:
        load_chain(path, 900.0, 0.0)
    assert exc.value.row == 3


@pytest.mark.parametrize(
    "row",
    ["2003-04-29,0.14,-5,1,2,call", "2003-04-29,0,900,1,2,call", "2003-04-29,abc,900,1,2,call",
     "2003-04-29,0.14,900,1,2,straddle", "29/4/03,0.14,900,1,2,call"],
)
def test_malformed_rows(chain_csv, row):
    with pytest.raises(ChainParseError, match="row 2"):
        load_chain(chain_csv([row]), 900.0, 0.0)


def test_missing_column():
    with pytest.raises(ChainParseError, match="missing columns"):
        parse_chain("quote_date,expiry_years,strike,bid\n2003-04-29,0.1,900,1\n", 900.0, 0.0)


def test_mixed_dates_rejected():
    text = "quote_date,expiry_years,strike,bid,ask,type\n2003-04-29,0.1,900,1,2,call\n2003-04-30,0.1,900,1,2,call\n"
    with pytest.raises(ChainParseError, match="row 3"):
        parse_chain(text, 900.0, 0.0)


def test_mid_price_examples():
    assert mid_price(OptionQuote(D, 0.14, 890, 43.0, 43.6)) == pytest.approx(43.3)
    assert mid_price(OptionQuote(D, 0.14, 890, 10.0, 10.0)) == 10.0
    assert mid_price(OptionQuote(D, 0.14, 890, 0.0, 0.2)) == pytest.approx(0.1)


@given(bid=st.floats(0, 1e4), spread=st.floats(0, 1e3))
def test_mid_between_bid_and_ask(bid, spread):
    q = OptionQuote(D, 0.1, 100.0, bid, bid + spread)
    assert q.bid <= q.mid <= q.ask


def _chain(strikes_expiries, spot=900.0):
    return OptionChain(D, spot, 0.01, [OptionQuote(D, T, K, 1.0, 1.2) for K, T in strikes_expiries])


def test_filter_rules():
    chain = _chain([(890, 0.14), (900, 0.02), (1000, 0.3), (927, 0.3), (873, 0.3)])
    res = filter_chain(chain)
    # 890 is about 1.1% from spot; 927 and 873 sit exactly on the 3% edge
    assert [(q.strike, q.expiry) for q in res.chain] == [(890, 0.14), (927, 0.3), (873, 0.3)]
    assert res.dropped == {"moneyness": 1, "expiry": 1}


def test_three_week_expiry_edge_is_kept():
    res = filter_chain(_chain([(900, 21 / 365), (900, 20 / 365)]))
    assert len(res.chain) == 1


def test_filter_empty_chain():
    res = filter_chain(OptionChain(D, 900.0, 0.0, []))
    assert len(res.chain) == 0
    assert res.dropped == {"moneyness": 0, "expiry": 0}


def test_filter_idempotent():
    chain = _chain([(K, T) for K in range(850, 960, 10) for T in (0.01, 0.05, 0.1, 0.5)])
    once = filter_chain(chain).chain
    twice = filter_chain(once).chain
    assert once == twice


def test_dump_load_identity(tmp_path):
    chain = OptionChain(
        D, 900.0, 0.02,
        [OptionQuote(D, 0.14, 890.0, 43.0, 43.6), OptionQuote(D, 0.3 + 1e-9, 912.5, 1 / 3, 2 / 3, "put")],
    )
    path = tmp_path / "c.csv"
    path.write_text(dump_chain(chain))
    assert load_chain(path, 900.0, 0.02).quotes == chain.quotes


def test_chain_rejects_foreign_quote():
    with pytest.raises(ValueError):
        OptionChain(D, 900.0, 0.0, [OptionQuote(dt.date(2003, 4, 30), 0.1, 900, 1, 2)])
