//! CSV ingestion of prices and universe metadata.
//!
//! Prices come either long-form (`ticker,date,adjusted_close`) or wide-form
//! (`date,<ticker>,<ticker>,...`); the header decides. Universe files use
//! `ticker,market_cap,sector,book_value_per_share`. Empty cells and `NA`
//! count as missing. Dates are ISO-8601 strings compared lexicographically.
//!
//! Every load reports the tickers it dropped and why, and its output is
//! ordered lexicographically by ticker.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const PRICES_LONG_HEADER: [&str; 3] = ["ticker", "date", "adjusted_close"];
pub const UNIVERSE_HEADER: [&str; 4] = ["ticker", "market_cap", "sector", "book_value_per_share"];

/// Adjusted closes, one series per ticker over a shared date axis.
#[derive(Clone, Debug, PartialEq)]
pub struct PricePanel {
    pub tickers: Vec<String>,
    pub dates: Vec<String>,
    /// `prices[i][s]` is ticker `i` on `dates[s]`.
    pub prices: Vec<Vec<f64>>,
}

impl PricePanel {
    pub fn price_on(&self, ticker: usize, date: &str) -> Option<f64> {
        let s = self.dates.iter().position(|d| d == date)?;
        Some(self.prices[ticker][s])
    }

    fn select(&self, keep: &[usize]) -> PricePanel {
        PricePanel {
            tickers: keep.iter().map(|&i| self.tickers[i].clone()).collect(),
            dates: self.dates.clone(),
            prices: keep.iter().map(|&i| self.prices[i].clone()).collect(),
        }
    }
}

/// Inclusive date bounds; `None` leaves that side open.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DateRange {
    pub start: Option<String>,
    pub end: Option<String>,
}

impl DateRange {
    pub fn contains(&self, date: &str) -> bool {
        self.start.as_deref().is_none_or(|s| date >= s) && self.end.as_deref().is_none_or(|e| date <= e)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dropped {
    pub ticker: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadedPrices {
    pub panel: PricePanel,
    pub dropped: Vec<Dropped>,
    pub n_input: usize,
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, source: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn is_missing(field: &str) -> bool {
    let f = field.trim();
    f.is_empty() || f.eq_ignore_ascii_case("na") || f.eq_ignore_ascii_case("nan")
}

fn parse_number(field: &str, path: &Path, line: u64, column: &str) -> Result<Option<f64>> {
    if is_missing(field) {
        return Ok(None);
    }
    field.trim().parse::<f64>().map(Some).map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: format!("`{field}` in column `{column}` is not a number"),
    })
}

fn open_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

type RawSeries = BTreeMap<String, BTreeMap<String, Option<f64>>>;

/// Loads adjusted closes in `range`. Tickers with a missing or nonpositive
/// close on any date in range are dropped with a reason.
pub fn load_prices(path: &Path, range: &DateRange) -> Result<LoadedPrices> {
    let mut reader = open_reader(path)?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    let raw = if header == PRICES_LONG_HEADER {
        read_long(&mut reader, path, range)?
    } else if header.first().map(String::as_str) == Some("date") && header.len() >= 2 {
        read_wide(&mut reader, path, &header, range)?
    } else {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            reason: format!(
                "header must be `ticker,date,adjusted_close` or `date,<tickers...>`, got `{}`",
                header.join(",")
            ),
        });
    };

    let dates: Vec<String> = raw
        .values()
        .flat_map(|series| series.keys().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n_input = raw.len();
    let mut tickers = Vec::new();
    let mut prices = Vec::new();
    let mut dropped = Vec::new();
    for (ticker, series) in raw {
        match complete_series(&series, &dates) {
            Ok(values) => {
                tickers.push(ticker);
                prices.push(values);
            }
            Err(reason) => dropped.push(Dropped { ticker, reason }),
        }
    }
    if tickers.is_empty() {
        return Err(Error::Empty(format!(
            "no ticker in {} has a complete positive price history in range",
            path.display()
        )));
    }
    for d in &dropped {
        log::info!("dropped {}: {}", d.ticker, d.reason);
    }
    Ok(LoadedPrices {
        panel: PricePanel {
            tickers,
            dates,
            prices,
        },
        dropped,
        n_input,
    })
}

fn complete_series(
    series: &BTreeMap<String, Option<f64>>,
    dates: &[String],
) -> std::result::Result<Vec<f64>, String> {
    dates
        .iter()
        .map(|d| match series.get(d) {
            None | Some(None) => Err(format!("missing price on {d}")),
            Some(Some(p)) if !(*p > 0.0 && p.is_finite()) => {
                Err(format!("nonpositive price {p} on {d}"))
            }
            Some(Some(p)) => Ok(*p),
        })
        .collect()
}

fn read_long(reader: &mut csv::Reader<File>, path: &Path, range: &DateRange) -> Result<RawSeries> {
    let mut raw = RawSeries::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                reason: format!("expected 3 fields, got {}", record.len()),
            });
        }
        let (ticker, date) = (&record[0], &record[1]);
        if ticker.is_empty() || date.is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                reason: "empty ticker or date".into(),
            });
        }
        let value = parse_number(&record[2], path, line, "adjusted_close")?;
        let series = raw.entry(ticker.to_owned()).or_default();
        if !range.contains(date) {
            continue;
        }
        if series.insert(date.to_owned(), value).is_some() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                reason: format!("duplicate row for {ticker} on {date}"),
            });
        }
    }
    Ok(raw)
}

fn read_wide(
    reader: &mut csv::Reader<File>,
    path: &Path,
    header: &[String],
    range: &DateRange,
) -> Result<RawSeries> {
    let mut raw: RawSeries = header[1..].iter().map(|t| (t.clone(), BTreeMap::new())).collect();
    if raw.len() != header.len() - 1 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            reason: "duplicate ticker column".into(),
        });
    }
    let mut seen = BTreeSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                reason: format!("expected {} fields, got {}", header.len(), record.len()),
            });
        }
        let date = &record[0];
        if !seen.insert(date.to_owned()) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                reason: format!("duplicate date {date}"),
            });
        }
        if !range.contains(date) {
            continue;
        }
        for (ticker, field) in header[1..].iter().zip(record.iter().skip(1)) {
            let value = parse_number(field, path, line, ticker)?;
            raw.get_mut(ticker)
                .expect("ticker columns initialised from header")
                .insert(date.to_owned(), value);
        }
    }
    Ok(raw)
}

/// Shortest round-trip decimal form.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Writes a panel in long form.
pub fn write_prices_long(path: &Path, panel: &PricePanel) -> Result<()> {
    let mut out = String::from("ticker,date,adjusted_close\n");
    for (ticker, series) in panel.tickers.iter().zip(&panel.prices) {
        for (date, p) in panel.dates.iter().zip(series) {
            out.push_str(&format!("{ticker},{date},{}\n", fmt_f64(*p)));
        }
    }
    write_file(path, out.as_bytes())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    File::create(path)
        .and_then(|mut f| f.write_all(bytes))
        .map_err(|e| io_err(path, e))
}

#[derive(Clone, Debug, PartialEq)]
pub struct UniverseRecord {
    pub ticker: String,
    pub market_cap: f64,
    pub sector: String,
    pub book_value_per_share: f64,
}

/// Per-ticker metadata as of its snapshot dates.
#[derive(Clone, Debug, PartialEq)]
pub struct UniverseSnapshot {
    pub records: Vec<UniverseRecord>,
    pub cap_date: String,
    pub book_date: String,
}

impl UniverseSnapshot {
    pub fn tickers(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.ticker.as_str())
    }

    pub fn get(&self, ticker: &str) -> Option<&UniverseRecord> {
        self.records
            .binary_search_by(|r| r.ticker.as_str().cmp(ticker))
            .ok()
            .map(|i| &self.records[i])
    }

    pub fn sector_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.records {
            *counts.entry(r.sector.clone()).or_insert(0) += 1;
        }
        counts
    }

    pub fn market_caps(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.market_cap).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadedUniverse {
    pub universe: UniverseSnapshot,
    pub dropped: Vec<Dropped>,
    pub n_input: usize,
}

/// Loads universe metadata. Rows missing a cap, sector or book value are
/// dropped; zero and negative book values are kept.
pub fn load_universe(path: &Path, cap_date: &str, book_date: &str) -> Result<LoadedUniverse> {
    let mut reader = open_reader(path)?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header != UNIVERSE_HEADER {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            reason: format!(
                "header must be `{}`, got `{}`",
                UNIVERSE_HEADER.join(","),
                header.join(",")
            ),
        });
    }
    let mut seen = BTreeSet::new();
    let mut records = Vec::new();
    let mut dropped = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 4 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                reason: format!("expected 4 fields, got {}", record.len()),
            });
        }
        let ticker = record[0].to_owned();
        if ticker.is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                reason: "empty ticker".into(),
            });
        }
        if !seen.insert(ticker.clone()) {
            return Err(Error::DuplicateTicker(ticker));
        }
        let cap = parse_number(&record[1], path, line, "market_cap")?;
        let book = parse_number(&record[3], path, line, "book_value_per_share")?;
        let sector = (!is_missing(&record[2])).then(|| record[2].to_owned());
        match (cap, sector, book) {
            (Some(market_cap), Some(sector), Some(book_value_per_share)) => {
                records.push(UniverseRecord {
                    ticker,
                    market_cap,
                    sector,
                    book_value_per_share,
                })
            }
            (cap, sector, _) => {
                let missing = if cap.is_none() {
                    "market_cap"
                } else if sector.is_none() {
                    "sector"
                } else {
                    "book_value_per_share"
                };
                dropped.push(Dropped {
                    ticker,
                    reason: format!("missing {missing}"),
                });
            }
        }
    }
    records.sort_by(|a, b| a.ticker.cmp(&b.ticker));
    dropped.sort_by(|a, b| a.ticker.cmp(&b.ticker));
    Ok(LoadedUniverse {
        universe: UniverseSnapshot {
            records,
            cap_date: cap_date.to_owned(),
            book_date: book_date.to_owned(),
        },
        dropped,
        n_input: seen.len(),
    })
}

/// Restricts both inputs to their common tickers, in lexicographic order.
pub fn align(
    panel: &PricePanel,
    universe: &UniverseSnapshot,
) -> Result<(PricePanel, UniverseSnapshot)> {
    let common: BTreeSet<&str> = panel
        .tickers
        .iter()
        .map(String::as_str)
        .filter(|t| universe.get(t).is_some())
        .collect();
    if common.is_empty() {
        return Err(Error::Empty(
            "price panel and universe share no tickers".into(),
        ));
    }
    let mut order: Vec<usize> = (0..panel.tickers.len())
        .filter(|&i| common.contains(panel.tickers[i].as_str()))
        .collect();
    order.sort_by(|&a, &b| panel.tickers[a].cmp(&panel.tickers[b]));
    let records = common
        .iter()
        .map(|t| universe.get(t).cloned().expect("ticker in intersection"))
        .collect();
    Ok((
        panel.select(&order),
        UniverseSnapshot {
            records,
            cap_date: universe.cap_date.clone(),
            book_date: universe.book_date.clone(),
        },
    ))
}

pub const KAPPA_HEADER: [&str; 2] = ["ticker", "kappa"];

/// Reads a `ticker,kappa` file, sorted by ticker. Missing values are errors.
pub fn load_kappa(path: &Path) -> Result<Vec<(String, f64)>> {
    let mut reader = open_reader(path)?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header != KAPPA_HEADER {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            reason: format!("header must be `ticker,kappa`, got `{}`", header.join(",")),
        });
    }
    let mut out = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let ticker = record.get(0).unwrap_or_default().to_owned();
        let value = parse_number(record.get(1).unwrap_or_default(), path, line, "kappa")?.ok_or_else(|| {
            Error::Parse {
                path: path.to_path_buf(),
                line,
                reason: format!("missing kappa for `{ticker}`"),
            }
        })?;
        if out.insert(ticker.clone(), value).is_some() {
            return Err(Error::DuplicateTicker(ticker));
        }
    }
    if out.is_empty() {
        return Err(Error::Empty(format!("{} has no rows", path.display())));
    }
    Ok(out.into_iter().collect())
}

/// Path of `name` inside `dir`.
pub fn out_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn kappa_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "k.csv", "ticker,kappa\nBBB,-1.5\nAAA,2\n");
        assert_eq!(load_kappa(&p).unwrap(), vec![("AAA".into(), 2.0), ("BBB".into(), -1.5)]);
        let p = write(&dir, "k2.csv", "ticker,kappa\nAAA,2\nAAA,3\n");
        assert!(matches!(load_kappa(&p), Err(Error::DuplicateTicker(t)) if t == "AAA"));
        let p = write(&dir, "k3.csv", "ticker,kappa\nAAA,NA\n");
        assert!(matches!(load_kappa(&p), Err(Error::Parse { line: 2, .. })));
    }

    const FIVE: &str = "ticker,date,adjusted_close
AAA,2014-03-18,10
AAA,2014-03-19,11
AAA,2014-03-20,12
BBB,2014-03-18,5
BBB,2014-03-19,5.5
BBB,2014-03-20,5.25
CCC,2014-03-18,20
CCC,2014-03-20,21
DDD,2014-03-18,1
DDD,2014-03-19,NA
DDD,2014-03-20,1.2
EEE,2014-03-18,3
EEE,2014-03-19,0
EEE,2014-03-20,3.3
";

    #[test]
    fn long_form_drops_gapped_tickers_with_reasons() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "p.csv", FIVE);
        let loaded = load_prices(&p, &DateRange::default()).unwrap();
        assert_eq!(loaded.panel.tickers, ["AAA", "BBB"]);
        assert_eq!(loaded.n_input, 5);
        assert_eq!(loaded.n_input, loaded.panel.tickers.len() + loaded.dropped.len());
        let reasons: Vec<_> = loaded.dropped.iter().map(|d| (d.ticker.as_str(), d.reason.as_str())).collect();
        assert_eq!(
            reasons,
            [
                ("CCC", "missing price on 2014-03-19"),
                ("DDD", "missing price on 2014-03-19"),
                ("EEE", "nonpositive price 0 on 2014-03-19"),
            ]
        );
    }

    #[test]
    fn date_range_restricts_before_completeness_check() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "p.csv", FIVE);
        let range = DateRange {
            start: Some("2014-03-20".into()),
            end: None,
        };
        let loaded = load_prices(&p, &range).unwrap();
        assert_eq!(loaded.panel.dates, ["2014-03-20"]);
        assert_eq!(loaded.panel.tickers, ["AAA", "BBB", "CCC", "DDD", "EEE"]);
    }

    #[test]
    fn wide_form_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "w.csv", "date,ZZZ,AAA\n2020-01-02,2,1\n2020-01-03,,1.5\n2020-01-01,1,1\n");
        let loaded = load_prices(&p, &DateRange::default()).unwrap();
        assert_eq!(loaded.panel.tickers, ["AAA"]);
        assert_eq!(loaded.panel.dates, ["2020-01-01", "2020-01-02", "2020-01-03"]);
        assert_eq!(loaded.panel.prices[0], [1.0, 1.0, 1.5]);
        assert_eq!(loaded.dropped[0].ticker, "ZZZ");
    }

    #[test]
    fn malformed_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "p.csv", "ticker,date,adjusted_close\nA,d1,1\nA,d2,abc\n");
        match load_prices(&p, &DateRange::default()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let p = write(&dir, "q.csv", "symbol,when,px\nA,d1,1\n");
        assert!(matches!(load_prices(&p, &DateRange::default()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn empty_universe_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "p.csv", "ticker,date,adjusted_close\nA,d1,1\nA,d2,-1\n");
        assert!(matches!(load_prices(&p, &DateRange::default()), Err(Error::Empty(_))));
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let panel = PricePanel {
            tickers: vec!["A".into(), "B".into()],
            dates: vec!["2020-01-01".into(), "2020-01-02".into()],
            prices: vec![vec![0.1 + 0.2, 1e-7 / 3.0], vec![123456.789, std::f64::consts::PI]],
        };
        let p = dir.path().join("rt.csv");
        write_prices_long(&p, &panel).unwrap();
        let back = load_prices(&p, &DateRange::default()).unwrap();
        assert_eq!(back.panel, panel);
    }

    const UNIVERSE: &str = "ticker,market_cap,sector,book_value_per_share
MMM,5e9,Industrials,12.5
AAA,2e8,Energy,-3
BBB,NA,Energy,1
CCC,7e9,,2
DDD,3e9,Utilities,
EEE,1e10,Utilities,0
";

    #[test]
    fn universe_drops_incomplete_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "u.csv", UNIVERSE);
        let loaded = load_universe(&p, "2014-03-18", "2014-03-18").unwrap();
        let u = &loaded.universe;
        assert_eq!(u.tickers().collect::<Vec<_>>(), ["AAA", "EEE", "MMM"]);
        assert_eq!(loaded.n_input, 6);
        let reasons: Vec<_> = loaded.dropped.iter().map(|d| format!("{}:{}", d.ticker, d.reason)).collect();
        assert_eq!(
            reasons,
            ["BBB:missing market_cap", "CCC:missing sector", "DDD:missing book_value_per_share"]
        );
        assert_eq!(u.get("AAA").unwrap().book_value_per_share, -3.0);
        let counts = u.sector_counts();
        assert_eq!(counts["Utilities"], 1);
        assert_eq!(counts["Energy"], 1);
        assert_eq!(counts["Industrials"], 1);
    }

    #[test]
    fn universe_rejects_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "u.csv", "ticker,market_cap,sector,book_value_per_share\nA,1,X,1\nA,2,X,1\n");
        match load_universe(&p, "d", "d") {
            Err(Error::DuplicateTicker(t)) => assert_eq!(t, "A"),
            other => panic!("{other:?}"),
        }
    }

    fn universe_of(tickers: &[&str]) -> UniverseSnapshot {
        let mut records: Vec<_> = tickers
            .iter()
            .map(|t| UniverseRecord {
                ticker: t.to_string(),
                market_cap: 1e9,
                sector: "S".into(),
                book_value_per_share: 1.0,
            })
            .collect();
        records.sort_by(|a, b| a.ticker.cmp(&b.ticker));
        UniverseSnapshot {
            records,
            cap_date: "c".into(),
            book_date: "b".into(),
        }
    }

    fn panel_of(tickers: &[&str]) -> PricePanel {
        PricePanel {
            tickers: tickers.iter().map(|t| t.to_string()).collect(),
            dates: vec!["d".into()],
            prices: tickers.iter().enumerate().map(|(i, _)| vec![i as f64 + 1.0]).collect(),
        }
    }

    #[test]
    fn align_cases() {
        let (p, u) = align(&panel_of(&["A", "B"]), &universe_of(&["A", "B"])).unwrap();
        assert_eq!(p, panel_of(&["A", "B"]));
        assert_eq!(u, universe_of(&["A", "B"]));
        assert!(matches!(
            align(&panel_of(&["A"]), &universe_of(&["B"])),
            Err(Error::Empty(_))
        ));
        let (p, u) = align(&panel_of(&["Q", "C", "A", "Z"]), &universe_of(&["Z", "B", "C", "Q"])).unwrap();
        assert_eq!(p.tickers, ["C", "Q", "Z"]);
        assert_eq!(p.prices, [vec![2.0], vec![1.0], vec![4.0]]);
        assert_eq!(u.tickers().collect::<Vec<_>>(), ["C", "Q", "Z"]);
    }
}
