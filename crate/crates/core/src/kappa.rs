//! Return panels, benchmark adjustments and per-ticker bubble ratios.
//!
//! κ_i = 2·Mean(R_i)/Var(R_i) over the serial (time) dimension of ticker
//! `i`'s returns. Mean and variance are per observation period, so the ratio
//! carries no time unit.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::data_io::PricePanel;
use crate::error::{Error, Result};
use crate::stats::{mean, quantile_sorted, sample_variance, sorted_copy};

/// Which cross-sectional benchmark, if any, has been subtracted from the returns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BenchmarkMode {
    /// Raw close-to-close returns.
    Vanilla,
    /// Equally weighted benchmark removed.
    Demeaned,
    /// `ln(C)`-weighted benchmark removed.
    LogCap,
    /// Cap-weighted benchmark removed.
    Cap,
}

impl BenchmarkMode {
    pub const ALL: [BenchmarkMode; 4] = [
        BenchmarkMode::Vanilla,
        BenchmarkMode::Demeaned,
        BenchmarkMode::LogCap,
        BenchmarkMode::Cap,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchmarkMode::Vanilla => "vanilla",
            BenchmarkMode::Demeaned => "demeaned",
            BenchmarkMode::LogCap => "logcap",
            BenchmarkMode::Cap => "cap",
        }
    }
}

impl fmt::Display for BenchmarkMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchmarkMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BenchmarkMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::param("mode", format!("unknown benchmark mode `{s}`")))
    }
}

/// How a return is formed from consecutive closes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ReturnKind {
    /// `P_s / P_{s-1} - 1`
    #[default]
    Simple,
    /// `ln(P_s / P_{s-1})`
    Log,
}

impl FromStr for ReturnKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple" => Ok(ReturnKind::Simple),
            "log" => Ok(ReturnKind::Log),
            _ => Err(Error::param("returns", format!("unknown return kind `{s}`"))),
        }
    }
}

/// `N × K` matrix of returns, row-major by ticker.
#[derive(Clone, Debug, PartialEq)]
pub struct ReturnPanel {
    pub tickers: Vec<String>,
    /// Dates of the `K + 1` closes the returns were formed from.
    pub dates: Vec<String>,
    returns: Vec<f64>,
    pub mode: BenchmarkMode,
}

impl ReturnPanel {
    pub fn from_rows(
        tickers: Vec<String>,
        dates: Vec<String>,
        rows: Vec<Vec<f64>>,
        mode: BenchmarkMode,
    ) -> Result<Self> {
        let k = dates.len().saturating_sub(1);
        if rows.len() != tickers.len() {
            return Err(Error::param("rows", "one row per ticker required"));
        }
        if let Some((t, _)) = tickers.iter().zip(&rows).find(|(_, r)| r.len() != k) {
            return Err(Error::data(t.clone(), format!("expected {k} returns")));
        }
        Ok(Self {
            tickers,
            dates,
            returns: rows.concat(),
            mode,
        })
    }

    pub fn n_tickers(&self) -> usize {
        self.tickers.len()
    }

    pub fn n_returns(&self) -> usize {
        self.dates.len().saturating_sub(1)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let k = self.n_returns();
        &self.returns[i * k..(i + 1) * k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_tickers()).map(|i| self.row(i))
    }

    pub fn get(&self, ticker: usize, period: usize) -> f64 {
        self.returns[ticker * self.n_returns() + period]
    }

    /// Weighted cross-sectional mean of every return column.
    pub fn column_means(&self, weights: &[f64]) -> Vec<f64> {
        let k = self.n_returns();
        let total: f64 = weights.iter().sum();
        (0..k)
            .map(|s| {
                self.rows()
                    .zip(weights)
                    .map(|(row, w)| w * row[s])
                    .sum::<f64>()
                    / total
            })
            .collect()
    }

    fn subtract_benchmark(&self, weights: &[f64], mode: BenchmarkMode) -> ReturnPanel {
        let bench = self.column_means(weights);
        let k = self.n_returns();
        let returns = self
            .returns
            .iter()
            .enumerate()
            .map(|(idx, r)| r - bench[idx % k])
            .collect();
        ReturnPanel {
            tickers: self.tickers.clone(),
            dates: self.dates.clone(),
            returns,
            mode,
        }
    }

    fn require_vanilla(&self) -> Result<()> {
        if self.mode != BenchmarkMode::Vanilla {
            return Err(Error::ModeMismatch {
                expected: BenchmarkMode::Vanilla.as_str(),
                found: self.mode.as_str(),
            });
        }
        Ok(())
    }
}

/// Close-to-close returns of every ticker in the panel.
pub fn compute_returns(prices: &PricePanel, kind: ReturnKind) -> Result<ReturnPanel> {
    if prices.dates.len() < 2 {
        return Err(Error::Empty("at least two price dates are needed".into()));
    }
    let mut rows = Vec::with_capacity(prices.tickers.len());
    for (ticker, series) in prices.tickers.iter().zip(&prices.prices) {
        if let Some((i, p)) = series.iter().enumerate().find(|(_, p)| !(**p > 0.0 && p.is_finite())) {
            return Err(Error::Data {
                ticker: ticker.clone(),
                date: Some(prices.dates[i].clone()),
                reason: format!("nonpositive price {p}"),
            });
        }
        rows.push(
            series
                .windows(2)
                .map(|w| match kind {
                    ReturnKind::Simple => w[1] / w[0] - 1.0,
                    ReturnKind::Log => (w[1] / w[0]).ln(),
                })
                .collect(),
        );
    }
    ReturnPanel::from_rows(
        prices.tickers.clone(),
        prices.dates.clone(),
        rows,
        BenchmarkMode::Vanilla,
    )
}

/// Subtracts the equally weighted cross-sectional mean from every column.
pub fn demean_cross_section(panel: &ReturnPanel) -> Result<ReturnPanel> {
    panel.require_vanilla()?;
    Ok(panel.subtract_benchmark(&vec![1.0; panel.n_tickers()], BenchmarkMode::Demeaned))
}

/// Subtracts a weighted cross-sectional benchmark. For [`BenchmarkMode::LogCap`]
/// the weights are `ln C_i`; for [`BenchmarkMode::Cap`] they are `C_i`.
pub fn benchmark_adjust(
    panel: &ReturnPanel,
    weights: &[f64],
    mode: BenchmarkMode,
) -> Result<ReturnPanel> {
    panel.require_vanilla()?;
    if !matches!(mode, BenchmarkMode::LogCap | BenchmarkMode::Cap) {
        return Err(Error::param("mode", format!("`{mode}` is not a weighted benchmark")));
    }
    if weights.len() != panel.n_tickers() {
        return Err(Error::param(
            "weights",
            format!("{} weights for {} tickers", weights.len(), panel.n_tickers()),
        ));
    }
    if let Some((t, w)) = panel
        .tickers
        .iter()
        .zip(weights)
        .find(|(_, w)| !(**w > 0.0 && w.is_finite()))
    {
        return Err(Error::data(t.clone(), format!("benchmark weight {w} is not positive")));
    }
    Ok(panel.subtract_benchmark(weights, mode))
}

/// Benchmark weights from market caps: `ln C` or `C`.
pub fn cap_weights(caps: &[f64], mode: BenchmarkMode) -> Vec<f64> {
    match mode {
        BenchmarkMode::LogCap => caps.iter().map(|c| c.ln()).collect(),
        _ => caps.to_vec(),
    }
}

/// Returns of `vanilla` under `mode`. The weighted modes need market caps in
/// ticker order.
pub fn adjust_for_mode(vanilla: &ReturnPanel, mode: BenchmarkMode, caps: Option<&[f64]>) -> Result<ReturnPanel> {
    match mode {
        BenchmarkMode::Vanilla => {
            vanilla.require_vanilla()?;
            Ok(vanilla.clone())
        }
        BenchmarkMode::Demeaned => demean_cross_section(vanilla),
        BenchmarkMode::LogCap | BenchmarkMode::Cap => {
            let caps = caps.ok_or_else(|| Error::param("mode", format!("`{mode}` needs market caps from a universe file")))?;
            benchmark_adjust(vanilla, &cap_weights(caps, mode), mode)
        }
    }
}

/// `2 · mean / variance` of one return series (sample variance, `K - 1`).
pub fn estimate_kappa(returns: &[f64]) -> Result<f64> {
    if returns.len() < 2 {
        return Err(Error::Empty(format!(
            "kappa needs at least 2 returns, got {}",
            returns.len()
        )));
    }
    let m = mean(returns);
    let var = sample_variance(returns);
    let scale = returns.iter().fold(0.0_f64, |a, r| a.max(r.abs()));
    if var <= (16.0 * f64::EPSILON * scale).powi(2) {
        return Err(Error::UndefinedKappa { ticker: None });
    }
    Ok(2.0 * m / var)
}

/// Center used by the mean absolute deviation column.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MadCenter {
    #[default]
    Median,
    Mean,
}

impl FromStr for MadCenter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "median" => Ok(MadCenter::Median),
            "mean" => Ok(MadCenter::Mean),
            _ => Err(Error::param("mad_center", format!("unknown MAD center `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
    /// Sample standard deviation; 0 for a single value.
    pub stdev: f64,
    /// Mean absolute deviation about the chosen center.
    pub mad: f64,
}

impl Summary {
    pub const COLUMNS: [&'static str; 8] =
        ["min", "q1", "median", "mean", "q3", "max", "stdev", "mad"];

    pub fn values(&self) -> [f64; 8] {
        [
            self.min,
            self.q1,
            self.median,
            self.mean,
            self.q3,
            self.max,
            self.stdev,
            self.mad,
        ]
    }
}

pub fn summarize(values: &[f64], center: MadCenter) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::Empty("no values to summarize".into()));
    }
    let sorted = sorted_copy(values);
    let m = mean(values);
    let median = quantile_sorted(&sorted, 0.5);
    let c = match center {
        MadCenter::Median => median,
        MadCenter::Mean => m,
    };
    Ok(Summary {
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        median,
        mean: m,
        q3: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
        stdev: sample_variance(values).sqrt(),
        mad: values.iter().map(|v| (v - c).abs()).sum::<f64>() / values.len() as f64,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct KappaReport {
    pub mode: BenchmarkMode,
    pub per_ticker: Vec<(String, f64)>,
    pub summary: Summary,
}

/// κ for every ticker in the panel. A zero-variance ticker is an error naming it.
pub fn kappa_report(panel: &ReturnPanel, center: MadCenter) -> Result<KappaReport> {
    let per_ticker = (0..panel.n_tickers())
        .into_par_iter()
        .map(|i| {
            let ticker = &panel.tickers[i];
            estimate_kappa(panel.row(i))
                .map(|k| (ticker.clone(), k))
                .map_err(|e| match e {
                    Error::UndefinedKappa { .. } => Error::UndefinedKappa {
                        ticker: Some(ticker.clone()),
                    },
                    other => other,
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = per_ticker.iter().map(|(_, k)| *k).collect();
    Ok(KappaReport {
        mode: panel.mode,
        summary: summarize(&values, center)?,
        per_ticker,
    })
}

/// Kernel density on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityEstimate {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
    /// All inputs were equal; the estimate is a unit-mass spike.
    pub degenerate: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bandwidth {
    /// `0.9 · min(sd, IQR/1.34) · n^{-1/5}`
    Silverman,
    Fixed(f64),
}

pub const DEFAULT_GRID_POINTS: usize = 512;
const MAX_GRID_POINTS: usize = 1 << 16;
/// Kernels are cut off this many bandwidths from their center.
const KERNEL_REACH: f64 = 8.0;
/// The grid extends this many bandwidths beyond the data.
const GRID_PAD: f64 = 5.0;

pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let sorted = sorted_copy(values);
    let sd = sample_variance(values).sqrt();
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr / 1.34),
        (true, false) => sd,
        (false, true) => iqr / 1.34,
        (false, false) => 0.0,
    };
    0.9 * spread * (values.len() as f64).powf(-0.2)
}

/// Gaussian kernel density estimate.
///
/// The grid spans the data padded by five bandwidths. It has `points` nodes,
/// or more when the data range would leave the grid coarser than one
/// bandwidth per node.
pub fn density(values: &[f64], bandwidth: Bandwidth, points: usize) -> Result<DensityEstimate> {
    if values.len() < 2 {
        return Err(Error::Empty("density needs at least 2 values".into()));
    }
    let sorted = sorted_copy(values);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    if lo == hi {
        log::warn!("all {} values equal {lo}; density is a single spike", values.len());
        let half = 1e-6 * lo.abs().max(1.0);
        return Ok(DensityEstimate {
            grid: vec![lo - half, lo, lo + half],
            density: vec![0.0, 1.0 / half, 0.0],
            bandwidth: 0.0,
            degenerate: true,
        });
    }
    let h = match bandwidth {
        Bandwidth::Silverman => silverman_bandwidth(values),
        Bandwidth::Fixed(h) if h > 0.0 && h.is_finite() => h,
        Bandwidth::Fixed(h) => {
            return Err(Error::param("bandwidth", format!("must be positive, got {h}")))
        }
    };
    let (start, end) = (lo - GRID_PAD * h, hi + GRID_PAD * h);
    let needed = ((end - start) / h).ceil() as usize + 1;
    let m = points.max(needed).clamp(2, MAX_GRID_POINTS);
    let dx = (end - start) / (m - 1) as f64;
    let grid: Vec<f64> = (0..m).map(|i| start + i as f64 * dx).collect();
    let norm = 1.0 / (values.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let density = grid
        .par_iter()
        .map(|&x| {
            let from = sorted.partition_point(|&v| v < x - KERNEL_REACH * h);
            let to = sorted.partition_point(|&v| v <= x + KERNEL_REACH * h);
            sorted[from..to]
                .iter()
                .map(|v| {
                    let z = (x - v) / h;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect();
    Ok(DensityEstimate {
        grid,
        density,
        bandwidth: h,
        degenerate: false,
    })
}

/// Trapezoid rule on a (possibly nonuniform) grid.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}
