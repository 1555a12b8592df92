import datetime as dt
import json
import re

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from regimevol.market_data import OptionChain
from regimevol.pricer import Model, RegimePricingContext
from regimevol.report import (
    REPLAY_NOTE,
    ReportError,
    ReportRow,
    average_pct_error,
    build_report,
    emit_plot_data,
    read_plot_data,
    read_table,
    reference_tables,
    replay_table,
)
from regimevol.smile import SmileFit, calibrate

from conftest import QUOTE_DATE, flat_chain


def test_error_examples():
    assert average_pct_error([10, 20, 30], [10, 20, 30]) == 0.0
    assert average_pct_error([100, 50], [90, 55]) == pytest.approx(10.0, abs=1e-12)


def test_error_contract():
    with pytest.raises(ReportError):
        average_pct_error([1, 2], [1])
    with pytest.raises(ReportError):
        average_pct_error([0.0, 2], [1, 2])
    with pytest.raises(ReportError):
        average_pct_error([], [])


@given(
    st.lists(st.tuples(st.floats(0.1, 1e3), st.floats(0, 1e3)), min_size=1, max_size=20),
    st.floats(1e-3, 1e3),
)
def test_error_scale_invariant(pairs, lam):
    obs, mod = zip(*pairs)
    base = average_pct_error(obs, mod)
    scaled = average_pct_error([lam * o for o in obs], [lam * m for m in mod])
    assert scaled == pytest.approx(base, rel=1e-9, abs=1e-9)


def test_table_one_replay():
    t1 = reference_tables()[0]
    assert t1.number == 1 and t1.quote_date == dt.date(2003, 4, 29) and t1.regime == 1
    assert len(t1.rows) == 13
    rep = replay_table(t1.rows, t1.quote_date, t1.regime)
    for got, printed in zip(rep.avg_pct_error, (28.8, 6.9, 6.4)):
        assert abs(got - printed) <= 0.5
    assert REPLAY_NOTE in rep.to_text()


def test_read_table_errors(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("expiry,strike,empirical\n0.14,890,43.3\n")
    with pytest.raises(ReportError, match="columns"):
        read_table(p)
    p.write_text("expiry,strike,empirical,bs,standard,regime\n0.14,890,43.3,x,1,1\n")
    with pytest.raises(ReportError, match="row 2"):
        read_table(p)


def test_plot_data_for_table_one(tmp_path):
    t1 = reference_tables()[0]
    rep = replay_table(t1.rows, t1.quote_date, t1.regime)
    out = tmp_path / "plot.csv"
    assert emit_plot_data(rep, 0.14, out) == 7
    rows = read_plot_data(out, 0.14)
    strikes = [r.strike for r in rows]
    assert strikes == sorted(strikes) and strikes[0] == 890 and strikes[-1] == 945
    subset = sorted((r for r in rep.rows if r.expiry == 0.14), key=lambda r: r.strike)
    assert rows == subset
    with pytest.raises(ReportError):
        emit_plot_data(rep, 0.77, out)


def test_single_row_plot(tmp_path):
    rep = replay_table([ReportRow(0.2, 900.0, 10.0, 9.0, 9.5, 9.7)])
    out = tmp_path / "one.csv"
    assert emit_plot_data(rep, 0.2, out) == 1
    assert len(out.read_text().splitlines()) == 2


def _regime_ctx(chain, sigma_i, regime=1):
    fit_i = calibrate(chain, sigma_i)
    return RegimePricingContext(regime, sigma_i, fit_i, dt.date(2004, 1, 1))


def test_flat_single_quote_report():
    chain = flat_chain(900.0, 0.02, 0.1277, [900], [0.3])
    fit = SmileFit(0.0, 0.1277, 0.1277, 0.02, 0.0, 0.0, 0.0, 1)
    rep = build_report(chain, fit, modes=("bs", "fouque"))
    row = rep.rows[0]
    assert row.bs_price == pytest.approx(row.fouque_standard_price, abs=1e-8)
    assert row.fouque_regime_price is None and rep.avg_pct_error[2] is None


def test_report_contracts():
    chain = flat_chain(900.0, 0.02, 0.15, [890, 900, 910], [0.1, 0.3])
    fit = calibrate(chain, 0.1277)
    with pytest.raises(ReportError, match="no quotes after filtering"):
        build_report(OptionChain(QUOTE_DATE, 900.0, 0.02, []), fit)
    with pytest.raises(ReportError):
        build_report(chain, None, modes=("bs",))
    with pytest.raises(ReportError):
        build_report(chain, fit, None, modes=("regime",))


def test_report_json_and_text_agree():
    chain = flat_chain(900.0, 0.02, 0.15, [890, 900, 910], [0.1, 0.3])
    fit = calibrate(chain, 0.1277)
    rep = build_report(chain, fit, _regime_ctx(chain, 0.116), modes=tuple(Model))
    assert len(rep.rows) == len(chain)
    assert all(e >= 0 for e in rep.avg_pct_error)
    d = json.loads(rep.to_json())
    text = rep.to_text()
    body = [line for line in text.splitlines() if re.match(r"\s+\d+\.\d\d\s", line)]
    assert len(body) == len(d["rows"])
    for line, row in zip(body, d["rows"]):
        cells = [float(c) for c in line.split()]
        assert cells[2:] == [row["observed_price"], row["bs_price"], row["fouque_standard_price"],
                             row["fouque_regime_price"]]
    err_line = next(line for line in text.splitlines() if "Avg % error" in line)
    shown = [float(v) for v in re.findall(r"(\d+\.\d)%", err_line)]
    assert shown == [d["avg_pct_error"][k] for k in ("bs", "standard", "regime")]


def test_report_deterministic():
    chain = flat_chain(900.0, 0.02, 0.15, [890, 900, 910], [0.1, 0.3])
    fit = calibrate(chain, 0.1277)
    ctx = _regime_ctx(chain, 0.116)
    assert build_report(chain, fit, ctx).to_json() == build_report(chain, fit, ctx).to_json()


def test_all_reference_tables_load():
    tables = reference_tables()
    assert [t.number for t in tables] == list(range(1, 9))
    assert [t.regime for t in tables] == [1, 1, 1, 1, 2, 2, 2, 2]
    assert all(np.all([r.observed_price > 0 for r in t.rows]) for t in tables)
