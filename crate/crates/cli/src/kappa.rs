//! `kappa`: per-ticker κ and its cross-sectional summary under each benchmark.

use std::path::{Path, PathBuf};

use bubbletree::data_io::{align, load_prices, load_universe, DateRange, Dropped, PricePanel, UniverseSnapshot};
use bubbletree::kappa::{
    adjust_for_mode, compute_returns, density, kappa_report, Bandwidth, BenchmarkMode, MadCenter,
    ReturnKind, Summary,
};

use crate::config::{key, Key, Settings};
use crate::output::{num, Outputs, Table};
use crate::CliError;

pub const KEYS: &[Key] = &[
    key("seed", "1", "unused; echoed for the manifest"),
    key("prices", "", "prices CSV, long (ticker,date,adjusted_close) or wide"),
    key("universe", "", "universe CSV; needed for the logcap and cap modes"),
    key("modes", "vanilla,demeaned,logcap,cap", "benchmark modes"),
    key("start", "", "first date kept, inclusive"),
    key("end", "", "last date kept, inclusive"),
    key("returns", "simple", "simple or log"),
    key("mad_center", "median", "center of the mean absolute deviation: median or mean"),
    key("density_points", "512", "minimum KDE grid size"),
    key("bandwidth", "silverman", "KDE bandwidth: silverman or a positive number"),
    key("cap_date", "", "date of the market-cap snapshot"),
    key("book_date", "", "date of the book values; P/B uses the close on this date"),
];

/// Prices and, when configured, the universe, restricted to common tickers.
pub struct Inputs {
    pub panel: PricePanel,
    pub universe: Option<UniverseSnapshot>,
    pub dropped: Vec<(&'static str, Dropped)>,
}

pub fn load_inputs(s: &Settings) -> Result<Inputs, CliError> {
    let range = DateRange {
        start: s.opt_string("start"),
        end: s.opt_string("end"),
    };
    let loaded = load_prices(&s.path("prices")?, &range)?;
    let mut dropped: Vec<(&'static str, Dropped)> = loaded.dropped.into_iter().map(|d| ("prices", d)).collect();
    for d in &dropped {
        log::warn!("dropped {} from prices: {}", d.1.ticker, d.1.reason);
    }
    let Some(path) = s.opt_path("universe") else {
        return Ok(Inputs {
            panel: loaded.panel,
            universe: None,
            dropped,
        });
    };
    let uni = load_universe(&path, s.raw("cap_date"), s.raw("book_date"))?;
    for d in &uni.dropped {
        log::warn!("dropped {} from universe: {}", d.ticker, d.reason);
    }
    dropped.extend(uni.dropped.into_iter().map(|d| ("universe", d)));
    let (panel, universe) = align(&loaded.panel, &uni.universe)?;
    for t in &loaded.panel.tickers {
        if universe.get(t).is_none() {
            dropped.push((
                "align",
                Dropped {
                    ticker: t.clone(),
                    reason: "not in universe".into(),
                },
            ));
        }
    }
    for t in uni.universe.tickers() {
        if !panel.tickers.iter().any(|p| p == t) {
            dropped.push((
                "align",
                Dropped {
                    ticker: t.to_owned(),
                    reason: "not in price panel".into(),
                },
            ));
        }
    }
    Ok(Inputs {
        panel,
        universe: Some(universe),
        dropped,
    })
}

pub fn drop_table(dropped: &[(&'static str, Dropped)]) -> Table {
    let mut t = Table::new(&["source", "ticker", "reason"]);
    for (src, d) in dropped {
        t.push(vec![src.to_string(), d.ticker.clone(), d.reason.clone()]);
    }
    t
}

pub fn return_kind(s: &Settings) -> Result<ReturnKind, CliError> {
    match s.raw("returns") {
        "simple" => Ok(ReturnKind::Simple),
        "log" => Ok(ReturnKind::Log),
        other => Err(CliError::Config {
            key: "returns".into(),
            value: other.into(),
            reason: "expected simple or log".into(),
        }),
    }
}

/// Vanilla κ per ticker, in ticker order.
pub fn vanilla_kappa(panel: &PricePanel, kind: ReturnKind) -> Result<Vec<(String, f64)>, CliError> {
    let r = compute_returns(panel, kind)?;
    Ok(kappa_report(&r, MadCenter::Median)?.per_ticker)
}

pub fn run(s: &Settings, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let modes: Vec<BenchmarkMode> = s
        .list("modes")
        .iter()
        .map(|m| m.parse::<BenchmarkMode>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config {
            key: "modes".into(),
            value: s.raw("modes").into(),
            reason: e.to_string(),
        })?;
    let center: MadCenter = s.parsed("mad_center")?;
    let bandwidth = match s.raw("bandwidth") {
        "silverman" => Bandwidth::Silverman,
        _ => Bandwidth::Fixed(s.f64("bandwidth")?),
    };
    let points = s.usize("density_points")?;
    let inputs = load_inputs(s)?;
    let caps = inputs.universe.as_ref().map(|u| u.market_caps());
    let vanilla = compute_returns(&inputs.panel, return_kind(s)?)?;

    let mut out = Outputs::new(out_dir);
    let mut header = vec!["mode"];
    header.extend(Summary::COLUMNS);
    let mut summary = Table::new(&header);
    for mode in &modes {
        let adjusted = adjust_for_mode(&vanilla, *mode, caps.as_deref())?;
        let report = kappa_report(&adjusted, center)?;
        let mut per = Table::new(&["ticker", "kappa"]);
        for (t, k) in &report.per_ticker {
            per.push(vec![t.clone(), num(*k)]);
        }
        out.add(format!("kappa_{mode}.csv"), per.csv());
        let mut row = vec![mode.as_str().to_owned()];
        row.extend(report.summary.values().iter().map(|v| num(*v)));
        summary.push(row);

        let values: Vec<f64> = report.per_ticker.iter().map(|x| x.1).collect();
        let est = density(&values, bandwidth, points)?;
        let mut dens = Table::new(&["grid", "density"]);
        for (x, p) in est.grid.iter().zip(&est.density) {
            dens.push(vec![num(*x), num(*p)]);
        }
        out.add(format!("density_{mode}.csv"), dens.csv());
    }
    out.add("summary.csv", summary.csv());
    let drops = drop_table(&inputs.dropped);
    out.add("dropped.csv", drops.csv());

    let mut text = format!(
        "kappa for {} tickers over {} returns ({} to {})\n\n",
        inputs.panel.tickers.len(),
        vanilla.n_returns(),
        inputs.panel.dates.first().map_or("", String::as_str),
        inputs.panel.dates.last().map_or("", String::as_str),
    );
    text.push_str(&summary.text());
    if !inputs.dropped.is_empty() {
        text.push_str("\nDropped\n");
        text.push_str(&drops.text());
    }
    out.add("kappa_report.txt", text);
    out.add(
        "manifest.txt",
        s.manifest(&[
            ("tickers", inputs.panel.tickers.len().to_string()),
            ("returns_per_ticker", vanilla.n_returns().to_string()),
        ]),
    );
    out.write()
}
