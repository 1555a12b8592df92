"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 data or validation error.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import sys
import warnings

import click

from . import __version__
from .market_data import DEFAULT_MIN_EXPIRY, DEFAULT_MONEYNESS_BAND, filter_chain, load_chain
from .pricer import Model, RegimePricingContext, price_with_model
from .regimes import RegimeCalendar, load_regime_labels, load_regime_params, regime_for_date
from .report import (
    GAMMA_NOTE,
    ReportError,
    build_report,
    emit_plot_data,
    read_table,
    reference_tables,
    replay_table,
)
from .simulation import (
    SimConfig,
    default_n_steps,
    dump_paths,
    ergodic_sigma_bar,
    mc_option_price,
    simulate_rsexpou_paths,
)
from .smile import calibrate, calibrate_regime

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

MODEL_CHOICES = {"bs": Model.BLACK_SCHOLES, "fouque": Model.FOUQUE_STANDARD, "regime": Model.FOUQUE_REGIME}

log = logging.getLogger("regimevol")


class DataError(click.ClickException):
    exit_code = EXIT_DATA


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def chain_options(f):
    f = click.option("--min-expiry", type=float, default=DEFAULT_MIN_EXPIRY, show_default=True,
                     help="Minimum expiry in years.")(f)
    f = click.option("--moneyness-band", type=float, default=DEFAULT_MONEYNESS_BAND, show_default=True,
                     help="Keep quotes with |K/spot - 1| within this band.")(f)
    f = click.option("--rate", type=float, required=True, help="Risk-free rate (per year).")(f)
    f = click.option("--spot", type=float, required=True, help="Underlying level on the quote date.")(f)
    f = click.option("--chain", "chain_path", type=click.Path(exists=True, dir_okay=False), required=True,
                     help="Option chain CSV.")(f)
    return f


def regime_options(f):
    f = click.option("--refit/--reuse-fit", default=True, show_default=True,
                     help="Refit the smile for the regime, or reuse the global line.")(f)
    f = click.option("--switch-interval", type=float, default=1.0, show_default=True,
                     help="Years between possible regime switches.")(f)
    f = click.option("--regime-params", type=click.Path(exists=True, dir_okay=False),
                     help="JSON list of per-regime parameters.")(f)
    f = click.option("--regime-labels", type=click.Path(exists=True, dir_okay=False),
                     help="CSV quote_date,regime.")(f)
    return f


def _load(chain_path, spot, rate, moneyness_band, min_expiry):
    try:
        raw = load_chain(chain_path, spot, rate)
    except ValueError as exc:
        raise DataError(f"{chain_path}: {exc}") from None
    res = filter_chain(raw, moneyness_band, min_expiry)
    log.info("kept %d of %d quotes (dropped %s)", len(res.chain), len(raw), res.dropped)
    if len(res.chain) == 0:
        raise DataError("no quotes after filtering")
    return res


def _regime_context(chain, regime_labels, regime_params, switch_interval, refit, base_fit, vega_weighted):
    if not (regime_labels and regime_params):
        return None
    try:
        calendar = load_regime_labels(regime_labels, switch_interval)
        params = load_regime_params(regime_params)
        i = regime_for_date(calendar, chain.quote_date)
        if i not in params:
            raise ValueError(f"no parameters for regime {i}")
        sigma_i = params[i].sigma_bar
        fit_i = calibrate_regime(chain, sigma_i, base=base_fit, refit=refit, vega_weighted=vega_weighted)
        return RegimePricingContext(i, sigma_i, fit_i, calendar.next_switch_date(chain.quote_date))
    except ValueError as exc:
        raise DataError(str(exc)) from None


@click.group()
@click.version_option(__version__, prog_name="regimevol")
@click.option("-v", "--verbose", count=True, help="Increase log verbosity.")
def cli(verbose):
    """Perturbation pricing under regime-switching fast mean-reverting volatility."""
    logging.basicConfig(level=logging.WARNING - 10 * min(verbose, 2), format="%(levelname)s %(name)s: %(message)s")


@cli.command("calibrate")
@chain_options
@click.option("--sigma-bar", type=float, required=True, help="Global effective volatility.")
@regime_options
@click.option("--vega-weighted", is_flag=True, help="Weight the smile fit by vega.")
@click.option("--out", type=click.Path(dir_okay=False), help="Write JSON here instead of stdout.")
def calibrate_cmd(chain_path, spot, rate, moneyness_band, min_expiry, sigma_bar, regime_labels, regime_params,
                  switch_interval, refit, vega_weighted, out):
    """Fit the affine smile and derive the correction coefficients."""
    res = _load(chain_path, spot, rate, moneyness_band, min_expiry)
    try:
        fit = calibrate(res.chain, sigma_bar, vega_weighted=vega_weighted)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    ctx = _regime_context(res.chain, regime_labels, regime_params, switch_interval, refit, fit, vega_weighted)
    doc = {
        "quote_date": res.chain.quote_date.isoformat(),
        "n_quotes": len(res.chain),
        "dropped": res.dropped,
        "standard": fit.to_dict(),
        "regime_index": ctx.regime_index if ctx else None,
        "regime": ctx.fit_i.to_dict() if ctx else None,
    }
    _emit(json.dumps(doc, indent=2) + "\n", out)


@cli.command("price")
@chain_options
@click.option("--sigma-bar", type=float, required=True, help="Global effective volatility.")
@click.option("--model", type=click.Choice(list(MODEL_CHOICES)), default="fouque", show_default=True)
@regime_options
@click.option("--vega-weighted", is_flag=True)
@click.option("--out", type=click.Path(dir_okay=False), help="Write CSV here instead of stdout.")
def price_cmd(chain_path, spot, rate, moneyness_band, min_expiry, sigma_bar, model, regime_labels, regime_params,
              switch_interval, refit, vega_weighted, out):
    """Price every filtered quote with one method (CSV output)."""
    model = MODEL_CHOICES[model]
    res = _load(chain_path, spot, rate, moneyness_band, min_expiry)
    chain = res.chain
    try:
        fit = calibrate(chain, sigma_bar, vega_weighted=vega_weighted)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    ctx = None
    if model is Model.FOUQUE_REGIME:
        if not (regime_labels and regime_params):
            raise click.UsageError("--model regime needs --regime-labels and --regime-params")
        ctx = _regime_context(chain, regime_labels, regime_params, switch_interval, refit, fit, vega_weighted)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["expiry", "strike", "type", "observed", "c0", "correction", "total", "model", "regime", "negative"])
    for q in chain.quotes:
        try:
            p = price_with_model(q, model, fit, chain.spot, chain.rate, ctx=ctx)
        except ValueError as exc:
            raise DataError(str(exc)) from None
        w.writerow([q.expiry, q.strike, q.option_type.value, f"{q.mid:.6f}", f"{p.c0:.6f}", f"{p.correction:.6f}",
                    f"{p.total:.6f}", p.model.value, "" if p.regime is None else p.regime, int(p.negative)])
    _emit(buf.getvalue(), out)


@cli.command("report")
@chain_options
@click.option("--sigma-bar", type=float, required=True, help="Global effective volatility.")
@regime_options
@click.option("--vega-weighted", is_flag=True)
@click.option("--out", type=click.Path(dir_okay=False), help="Write the JSON report here.")
@click.option("--plot-expiry", type=float, help="Also write plot data for this expiry.")
@click.option("--plot-out", type=click.Path(dir_okay=False), help="Plot data CSV path.")
def report_cmd(chain_path, spot, rate, moneyness_band, min_expiry, sigma_bar, regime_labels, regime_params,
               switch_interval, refit, vega_weighted, out, plot_expiry, plot_out):
    """Three-method comparison table with average percentage errors."""
    if (plot_expiry is None) != (plot_out is None):
        raise click.UsageError("--plot-expiry and --plot-out go together")
    res = _load(chain_path, spot, rate, moneyness_band, min_expiry)
    try:
        fit = calibrate(res.chain, sigma_bar, vega_weighted=vega_weighted)
        ctx = _regime_context(res.chain, regime_labels, regime_params, switch_interval, refit, fit, vega_weighted)
        modes = [Model.BLACK_SCHOLES, Model.FOUQUE_STANDARD] + ([Model.FOUQUE_REGIME] if ctx else [])
        report = build_report(res.chain, fit, ctx, modes)
        if plot_expiry is not None:
            emit_plot_data(report, plot_expiry, plot_out)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    if out:
        with open(out, "w") as fh:
            fh.write(report.to_json() + "\n")
    click.echo(report.to_text(), nl=False)


@cli.command("simulate")
@click.option("--regime-params", type=click.Path(exists=True, dir_okay=False), required=True,
              help="JSON list of per-regime parameters (with OU parameters).")
@click.option("--regime-seq", default="1", show_default=True,
              help="Comma-separated regime per switch interval, starting at time 0.")
@click.option("--switch-interval", type=float, default=1.0, show_default=True)
@click.option("--horizon", type=float, default=0.25, show_default=True, help="Years.")
@click.option("--n-paths", type=int, default=10000, show_default=True)
@click.option("--n-steps", type=int, help="Time steps (default: dt <= 1/2520).")
@click.option("--rho", type=float, default=0.0, show_default=True)
@click.option("--gamma", "gamma_mpvr", type=float, default=0.0, show_default=True,
              help="Market price of volatility risk (risk-neutral mode).")
@click.option("--physical", is_flag=True, help="Simulate under the physical measure (drift mu).")
@click.option("--spot", type=float, default=100.0, show_default=True)
@click.option("--rate", type=float, default=0.0, show_default=True)
@click.option("--strike", "strikes", type=float, multiple=True, help="Strike to price (repeatable).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--dump-paths", "dump_path", type=click.Path(dir_okay=False), help="Write every path to this CSV.")
@click.option("--out", type=click.Path(dir_okay=False), help="Write the JSON summary here.")
def simulate_cmd(regime_params, regime_seq, switch_interval, horizon, n_paths, n_steps, rho, gamma_mpvr, physical,
                 spot, rate, strikes, seed, workers, dump_path, out):
    """Monte Carlo under (regime-switching) exponential-OU volatility."""
    try:
        seq = [int(s) for s in regime_seq.split(",") if s.strip()]
    except ValueError:
        raise click.UsageError(f"bad --regime-seq {regime_seq!r}") from None
    try:
        params = load_regime_params(regime_params)
        cfg = SimConfig(n_paths=n_paths, n_steps=n_steps or default_n_steps(horizon), horizon=horizon, rho=rho,
                        seed=seed, gamma_mpvr=gamma_mpvr)
        measure = "physical" if physical else "risk_neutral"
        bundle = simulate_rsexpou_paths(params, seq, RegimeCalendar(switch_interval=switch_interval), cfg, spot,
                                        rate, measure=measure, n_workers=workers)
    except (ValueError, OSError) as exc:
        raise DataError(str(exc)) from None
    summary = {
        "seed": seed,
        "n_paths": n_paths,
        "n_steps": cfg.n_steps,
        "horizon": horizon,
        "measure": measure,
        "regime_seq": seq,
        "sigma_bar_path0": ergodic_sigma_bar(bundle.vol_paths[0], cfg.dt),
        "terminal_mean": float(bundle.asset_paths[:, -1].mean()),
        "prices": [],
        "note": GAMMA_NOTE,
    }
    if strikes:
        if physical:
            raise click.UsageError("option prices need the risk-neutral measure (drop --physical)")
        for k in strikes:
            price, se = mc_option_price(bundle, k, rate, horizon)
            summary["prices"].append({"strike": k, "price": price, "std_error": se})
    if dump_path:
        dump_paths(bundle, dump_path)
    _emit(json.dumps(summary, indent=2) + "\n", out)


@cli.command("replay-table")
@click.argument("table_csv", required=False, type=click.Path(exists=True, dir_okay=False))
@click.option("--table", "table_no", type=click.IntRange(1, 8), help="Replay one bundled reference table.")
@click.option("--all", "replay_all", is_flag=True, help="Replay all bundled reference tables.")
@click.option("--out", type=click.Path(dir_okay=False), help="Write JSON results here.")
def replay_cmd(table_csv, table_no, replay_all, out):
    """Recompute average percentage errors from printed price columns."""
    if sum(bool(x) for x in (table_csv, table_no, replay_all)) != 1:
        raise click.UsageError("give exactly one of TABLE_CSV, --table or --all")
    results = []
    try:
        if table_csv:
            report = replay_table(read_table(table_csv))
            click.echo(report.to_text(), nl=False)
            results.append(report.to_dict())
        else:
            tables = reference_tables()
            if table_no:
                tables = [t for t in tables if t.number == table_no]
            for t in tables:
                report = replay_table(t.rows, t.quote_date, t.regime)
                click.echo(f"Table {t.number}")
                click.echo(report.to_text())
                printed = t.printed_error_pct
                click.echo(
                    "Printed errors: {bs:.1f}% {standard:.1f}% {regime:.1f}%\n".format(**printed)
                )
                doc = report.to_dict()
                doc["table"] = t.number
                doc["printed_error_pct"] = printed
                results.append(doc)
    except ReportError as exc:
        raise DataError(str(exc)) from None
    if out:
        with open(out, "w") as fh:
            json.dump(results, fh, indent=2)
            fh.write("\n")


def main(argv=None) -> int:
    warnings.simplefilter("default")
    try:
        cli.main(args=argv, prog_name="regimevol", standalone_mode=False)
    except DataError as exc:
        exc.show()
        return EXIT_DATA
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.exceptions.Exit as exc:
        return exc.exit_code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
