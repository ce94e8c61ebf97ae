"""Builds the synthetic price/universe fixture and its golden outputs.

Returns are drawn from the two-point tree law with a per-ticker planted
kappa; prices are the cumulative product. Golden values are computed here
with numpy and statsmodels, independently of the Rust code.

    python3 fixtures/generate.py
"""

import math
from pathlib import Path

import numpy as np
import statsmodels.api as sm

HERE = Path(__file__).resolve().parent
GOLDEN = HERE / "golden"
SEED = 20150318
N_DATES = 325
CAP_DATE = "2014-03-18"
BOOK_INDEX = 200

SECTORS = [
    ("Communications", 9),
    ("Consumer Discr.", 8),
    ("Consumer Staples", 7),
    ("Energy", 6),
    ("Financials", 6),
    ("Health Care", 6),
    ("Industrials", 5),
    ("Materials", 5),
    ("Technology", 4),
    ("Utilities", 4),
]
SECTOR_EFFECT = [1.0, -0.5, 2.0, -2.0, 0.0, 1.5, -1.0, 0.5, -1.5, 2.5]
ZERO_BOOK = 2
NEGATIVE_BOOK = 3
GAP_TICKER = "GAPX"
NA_CAP_TICKER = "NACP"
MODES = ["vanilla", "demeaned", "logcap", "cap"]


def fmt(x):
    """Shortest round-trip text of a double, as Rust's `{}` prints it."""
    return np.format_float_positional(float(x), unique=True, trim="-")


def dates():
    d = np.busday_offset("2014-01-02", np.arange(N_DATES), roll="forward")
    return [str(x) for x in d]


def two_point_returns(rng, kappa, a, k):
    nu = kappa * a * a / 2.0
    m = (math.exp(nu) - math.cosh(a)) / math.sinh(a)
    p = (1.0 + m) / 2.0
    up = rng.random(k) < p
    return np.where(up, math.expm1(a), math.expm1(-a))


def build(rng):
    ds = dates()
    tickers, sector, caps, books, kappa_true = [], [], [], [], []
    n = 0
    for s, (name, count) in enumerate(SECTORS):
        for _ in range(count):
            tickers.append(f"{name[:2].upper()}{n:02d}")
            sector.append(name)
            ln_cap = rng.uniform(np.log(2e8), np.log(2e11))
            caps.append(float(np.round(np.exp(ln_cap), -3)))
            kappa_true.append(1.0 + 1.2 * (ln_cap - 22.0) + SECTOR_EFFECT[s])
            books.append(float(np.round(rng.uniform(1.0, 40.0), 2)))
            n += 1
    order = rng.permutation(n)
    for j in order[:ZERO_BOOK]:
        books[j] = 0.0
    for j in order[ZERO_BOOK:ZERO_BOOK + NEGATIVE_BOOK]:
        books[j] = -float(np.round(rng.uniform(0.5, 10.0), 2))

    series = {}
    for t, kap in zip(tickers, kappa_true):
        a = rng.uniform(0.012, 0.03)
        r = two_point_returns(rng, kap, a, N_DATES - 1)
        s0 = float(np.round(rng.uniform(5.0, 300.0), 2))
        series[t] = s0 * np.concatenate([[1.0], np.cumprod(1.0 + r)])
    for extra in (GAP_TICKER, NA_CAP_TICKER):
        r = two_point_returns(rng, 1.0, 0.02, N_DATES - 1)
        series[extra] = 50.0 * np.concatenate([[1.0], np.cumprod(1.0 + r)])
    return ds, tickers, sector, caps, books, series


def write_inputs(ds, tickers, sector, caps, books, series):
    gap_day = ds[137]
    lines = ["ticker,date,adjusted_close"]
    for t in sorted(series):
        for d, p in zip(ds, series[t]):
            v = "NA" if (t == GAP_TICKER and d == gap_day) else fmt(p)
            lines.append(f"{t},{d},{v}")
    (HERE / "prices.csv").write_text("\n".join(lines) + "\n")

    rows = list(zip(tickers, caps, sector, books))
    rows.append((GAP_TICKER, 3.3e9, "Energy", 12.5))
    rows.append((NA_CAP_TICKER, None, "Utilities", 8.0))
    lines = ["ticker,market_cap,sector,book_value_per_share"]
    for t, c, s, b in sorted(rows):
        lines.append(f"{t},{'NA' if c is None else fmt(c)},{s},{fmt(b)}")
    (HERE / "universe.csv").write_text("\n".join(lines) + "\n")


def read_prices():
    out = {}
    for line in (HERE / "prices.csv").read_text().splitlines()[1:]:
        t, d, v = line.split(",")
        out.setdefault(t, {})[d] = None if v == "NA" else float(v)
    return out


def read_universe():
    out = {}
    for line in (HERE / "universe.csv").read_text().splitlines()[1:]:
        t, c, s, b = line.split(",")
        out[t] = (None if c == "NA" else float(c), s, float(b))
    return out


def quantile7(v, q):
    return float(np.quantile(v, q, method="linear"))


def summary(v):
    v = np.asarray(v)
    med = quantile7(v, 0.5)
    return [
        float(v.min()), quantile7(v, 0.25), med, float(v.mean()),
        quantile7(v, 0.75), float(v.max()), float(v.std(ddof=1)),
        float(np.abs(v - med).mean()),
    ]


def kde(v, points=512):
    v = np.sort(np.asarray(v))
    n = len(v)
    iqr = quantile7(v, 0.75) - quantile7(v, 0.25)
    h = 0.9 * min(v.std(ddof=1), iqr / 1.34) * n ** -0.2
    lo, hi = v[0] - 5 * h, v[-1] + 5 * h
    m = max(points, math.ceil((hi - lo) / h) + 1)
    grid = lo + np.arange(m) * ((hi - lo) / (m - 1))
    z = (grid[:, None] - v[None, :]) / h
    dens = np.exp(-0.5 * z * z).sum(axis=1) / (n * h * math.sqrt(2 * math.pi))
    return h, grid, dens


def regression_rows(name, y, cols, names):
    X = np.column_stack(cols)
    fit = sm.OLS(y, X, hasconst=True).fit()
    rows = []
    for j, v in enumerate(names):
        rows.append(f"{name},{v},{fmt(fit.params[j])},{fmt(fit.bse[j])},{fmt(fit.tvalues[j])},")
    rows += [
        f"{name},observations,,,,{len(y)}",
        f"{name},multiple_r_squared,,,,{fmt(fit.rsquared)}",
        f"{name},adjusted_r_squared,,,,{fmt(fit.rsquared_adj)}",
        f"{name},f_statistic,,,,{fmt(fit.fvalue)}",
        f"{name},f_df_model,,,,{int(round(fit.df_model))}",
        f"{name},f_df_resid,,,,{int(round(fit.df_resid))}",
    ]
    return rows


def golden():
    GOLDEN.mkdir(exist_ok=True)
    prices = read_prices()
    universe = read_universe()
    ds = sorted(next(iter(prices.values())))
    kept = sorted(t for t, p in prices.items() if all(x is not None and x > 0 for x in p.values()))
    uni = {t: u for t, u in universe.items() if u[0] is not None}
    tickers = sorted(set(kept) & set(uni))

    counts = {}
    for t, (_, s, _) in uni.items():
        counts[s] = counts.get(s, 0) + 1
    (GOLDEN / "sector_counts.csv").write_text(
        "sector,count\n" + "".join(f"{s},{c}\n" for s, c in sorted(counts.items()))
    )

    P = np.array([[prices[t][d] for d in ds] for t in tickers])
    R = P[:, 1:] / P[:, :-1] - 1.0
    lines = ["ticker,date,return"]
    for i, t in enumerate(tickers):
        for s in range(R.shape[1]):
            lines.append(f"{t},{ds[s + 1]},{fmt(R[i, s])}")
    (GOLDEN / "returns.csv").write_text("\n".join(lines) + "\n")

    caps = np.array([uni[t][0] for t in tickers])
    panels = {
        "vanilla": R,
        "demeaned": R - R.mean(axis=0),
        "logcap": R - (np.log(caps) @ R) / np.log(caps).sum(),
        "cap": R - (caps @ R) / caps.sum(),
    }
    summary_lines = ["mode,min,q1,median,mean,q3,max,stdev,mad"]
    kappas = {}
    for mode in MODES:
        X = panels[mode]
        k = 2.0 * X.mean(axis=1) / X.var(axis=1, ddof=1)
        kappas[mode] = k
        (GOLDEN / f"kappa_{mode}.csv").write_text(
            "ticker,kappa\n" + "".join(f"{t},{fmt(v)}\n" for t, v in zip(tickers, k))
        )
        summary_lines.append(mode + "," + ",".join(fmt(x) for x in summary(k)))
        h, grid, dens = kde(k)
        (GOLDEN / f"density_{mode}.csv").write_text(
            "grid,density\n" + "".join(f"{fmt(g)},{fmt(p)}\n" for g, p in zip(grid, dens))
        )
    (GOLDEN / "summary.csv").write_text("\n".join(summary_lines) + "\n")

    y = kappas["vanilla"]
    book_date = ds[BOOK_INDEX]
    lncap = np.log(caps)
    sector = np.array([uni[t][1] for t in tickers])
    book = np.array([uni[t][2] for t in tickers])
    price = np.array([prices[t][book_date] for t in tickers])
    labels = sorted(set(sector))
    dummies = [(sector == s).astype(float) for s in labels]
    ones = np.ones(len(tickers))
    pos = book > 0
    pb = price[pos] / book[pos]
    d_pos = [d[pos] for d in dummies]

    out = ["spec,variable,estimate,std_error,t_statistic,overall"]
    out += regression_rows("lncap", y, [ones, lncap], ["(Intercept)", "ln(C)"])
    out += regression_rows("lncap_sectors", y, [lncap] + dummies, ["ln(C)"] + labels)
    for name, var, label in [
        ("lncap_pb", pb, "P/B"),
        ("lncap_bp", 1.0 / pb, "B/P"),
        ("lncap_lnpb", np.log(pb), "ln(P/B)"),
    ]:
        out += regression_rows(name, y[pos], [ones[pos], lncap[pos], var], ["(Intercept)", "ln(C)", label])
    out += regression_rows(
        "lncap_sectors_lnpb", y[pos], [lncap[pos]] + d_pos + [np.log(pb)], ["ln(C)"] + labels + ["ln(P/B)"]
    )
    (GOLDEN / "regression_report.csv").write_text("\n".join(out) + "\n")

    before = {s: int((sector == s).sum()) for s in labels}
    after = {s: int((sector[pos] == s).sum()) for s in labels}
    (GOLDEN / "filter_report.csv").write_text(
        "sector,before,after\n" + "".join(f"{s},{before[s]},{after[s]}\n" for s in labels)
    )
    (GOLDEN / "fixture.txt").write_text(
        f"cap_date={CAP_DATE}\nbook_date={book_date}\n"
        f"zero_book={int((book == 0).sum())}\nnegative_book={int((book < 0).sum())}\n"
        f"gap_ticker={GAP_TICKER}\nna_cap_ticker={NA_CAP_TICKER}\n"
    )


def main():
    rng = np.random.default_rng(SEED)
    write_inputs(*build(rng))
    golden()


if __name__ == "__main__":
    main()
