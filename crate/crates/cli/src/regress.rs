//! `regress`: cross-sectional regressions of κ on size, sector and P/B.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bubbletree::data_io::{align, load_kappa, load_prices, load_universe, DateRange, Dropped};
use bubbletree::regress::{report_csv, report_text, run_spec, standard_specs, CrossSection, Spec, REPORT_HEADER};

use crate::config::{key, Key, Settings};
use crate::kappa::{drop_table, return_kind, vanilla_kappa};
use crate::output::Outputs;
use crate::CliError;

pub const KEYS: &[Key] = &[
    key("seed", "1", "unused; echoed for the manifest"),
    key("universe", "", "universe CSV (ticker,market_cap,sector,book_value_per_share)"),
    key("kappa", "", "ticker,kappa CSV; empty computes vanilla kappa from prices"),
    key("prices", "", "prices CSV; needed for P/B and when kappa is empty"),
    key("specs", "standard", "`standard` or `name:intercept+lncap+sectors;...`"),
    key("log_kappa", "false", "regress ln(kappa) on tickers with kappa > 0"),
    key("start", "", "first price date kept, inclusive"),
    key("end", "", "last price date kept, inclusive"),
    key("returns", "simple", "simple or log, when kappa is computed here"),
    key("cap_date", "", "date of the market-cap snapshot"),
    key("book_date", "", "date of the book values; P/B uses the close on this date"),
];

/// `standard`, or `;`-separated `name:variables` entries. A bare variable
/// list names itself.
pub fn parse_specs(text: &str) -> Result<Vec<Spec>, CliError> {
    let mut specs = Vec::new();
    for entry in text.split(';').map(str::trim).filter(|e| !e.is_empty()) {
        if entry == "standard" {
            specs.extend(standard_specs());
            continue;
        }
        let (name, list) = entry.split_once(':').unwrap_or((entry, entry));
        specs.push(Spec::parse(name.trim(), list)?);
    }
    if specs.is_empty() {
        return Err(CliError::Config {
            key: "specs".into(),
            value: text.into(),
            reason: "no specification given".into(),
        });
    }
    Ok(specs)
}

pub fn run(s: &Settings, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let specs = parse_specs(s.raw("specs"))?;
    let log_kappa = s.bool("log_kappa")?;
    let uni = load_universe(&s.path("universe")?, s.raw("cap_date"), s.raw("book_date"))?;
    let mut dropped: Vec<(&'static str, Dropped)> = uni.dropped.into_iter().map(|d| ("universe", d)).collect();
    let mut universe = uni.universe;

    let panel = match s.opt_path("prices") {
        Some(path) => {
            let range = DateRange {
                start: s.opt_string("start"),
                end: s.opt_string("end"),
            };
            let loaded = load_prices(&path, &range)?;
            dropped.extend(loaded.dropped.into_iter().map(|d| ("prices", d)));
            let (panel, aligned) = align(&loaded.panel, &universe)?;
            universe = aligned;
            Some(panel)
        }
        None => None,
    };
    let kappa: BTreeMap<String, f64> = match (s.opt_path("kappa"), &panel) {
        (Some(path), _) => load_kappa(&path)?.into_iter().collect(),
        (None, Some(panel)) => vanilla_kappa(panel, return_kind(s)?)?.into_iter().collect(),
        (None, None) => {
            return Err(CliError::Config {
                key: "kappa".into(),
                value: String::new(),
                reason: "give a kappa file or a prices file to compute it from".into(),
            })
        }
    };

    let mut keep = Vec::new();
    for r in universe.records.drain(..) {
        match kappa.get(&r.ticker) {
            None => dropped.push(("align", Dropped { ticker: r.ticker, reason: "no kappa".into() })),
            Some(k) if log_kappa && *k <= 0.0 => dropped.push((
                "log_kappa",
                Dropped { ticker: r.ticker, reason: format!("kappa {k} is not positive") },
            )),
            Some(_) => keep.push(r),
        }
    }
    universe.records = keep;
    if universe.records.is_empty() {
        return Err(bubbletree::Error::Empty("no ticker has both universe data and kappa".into()).into());
    }
    let y: Vec<f64> = universe
        .records
        .iter()
        .map(|r| if log_kappa { kappa[&r.ticker].ln() } else { kappa[&r.ticker] })
        .collect();
    let cs = match &panel {
        Some(panel) => CrossSection::from_panel(&universe, panel),
        None => CrossSection::new(&universe, |_| None),
    };

    let mut csv = format!("{REPORT_HEADER}\n");
    let mut text = format!(
        "Regressand: {} over {} tickers\n",
        if log_kappa { "ln(kappa)" } else { "kappa" },
        cs.len()
    );
    let mut filter = None;
    for spec in &specs {
        let (res, f) = run_spec(spec, &cs, &y)?;
        csv.push_str(&report_csv(spec, &res));
        text.push('\n');
        text.push_str(&report_text(spec, &res));
        filter = filter.or(f);
    }
    let mut out = Outputs::new(out_dir);
    out.add("regression_report.csv", csv);
    out.add("regression_report.txt", text);
    if let Some(f) = &filter {
        out.add("filter_report.csv", f.to_csv());
    }
    out.add("dropped.csv", drop_table(&dropped).csv());
    let mut derived = vec![("tickers", cs.len().to_string())];
    if let Some(f) = &filter {
        derived.push(("zero_book", f.zero_book.to_string()));
        derived.push(("negative_book", f.negative_book.to_string()));
    }
    out.add("manifest.txt", s.manifest(&derived));
    out.write()
}
