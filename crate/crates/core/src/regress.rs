//! Cross-sectional OLS of κ on log market cap, sector dummies and
//! price-to-book transforms.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::data_io::{fmt_f64, PricePanel, UniverseSnapshot};
use crate::error::{Error, Result};

/// Explanatory variable `U_A`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variable {
    LnCap,
    /// One indicator column per distinct sector.
    Sectors,
    /// Sector indicators without the lexicographically first sector.
    SectorsReduced,
    PriceToBook,
    BookToPrice,
    LnPriceToBook,
}

impl Variable {
    pub fn as_str(self) -> &'static str {
        match self {
            Variable::LnCap => "lncap",
            Variable::Sectors => "sectors",
            Variable::SectorsReduced => "sectors-1",
            Variable::PriceToBook => "pb",
            Variable::BookToPrice => "bp",
            Variable::LnPriceToBook => "lnpb",
        }
    }

    fn label(self) -> &'static str {
        match self {
            Variable::LnCap => "ln(C)",
            Variable::PriceToBook => "P/B",
            Variable::BookToPrice => "B/P",
            Variable::LnPriceToBook => "ln(P/B)",
            Variable::Sectors | Variable::SectorsReduced => "sector",
        }
    }

    pub fn uses_book(self) -> bool {
        matches!(
            self,
            Variable::PriceToBook | Variable::BookToPrice | Variable::LnPriceToBook
        )
    }

    fn is_sector_block(self) -> bool {
        matches!(self, Variable::Sectors | Variable::SectorsReduced)
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "lncap" => Variable::LnCap,
            "sectors" => Variable::Sectors,
            "sectors-1" => Variable::SectorsReduced,
            "pb" => Variable::PriceToBook,
            "bp" => Variable::BookToPrice,
            "lnpb" => Variable::LnPriceToBook,
            other => {
                return Err(Error::param(
                    "variables",
                    format!("unknown variable `{other}` (lncap|sectors|sectors-1|pb|bp|lnpb)"),
                ))
            }
        })
    }
}

/// Per-ticker inputs to a regression, in universe order.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossSection {
    pub tickers: Vec<String>,
    pub market_cap: Vec<f64>,
    pub sector: Vec<String>,
    pub book_value_per_share: Vec<f64>,
    /// Share price used for P/B; `None` where unavailable.
    pub price: Vec<Option<f64>>,
}

impl CrossSection {
    /// `price` is looked up by ticker; tickers it does not cover get `None`.
    pub fn new(universe: &UniverseSnapshot, price: impl Fn(&str) -> Option<f64>) -> Self {
        let r = &universe.records;
        CrossSection {
            tickers: r.iter().map(|x| x.ticker.clone()).collect(),
            market_cap: r.iter().map(|x| x.market_cap).collect(),
            sector: r.iter().map(|x| x.sector.clone()).collect(),
            book_value_per_share: r.iter().map(|x| x.book_value_per_share).collect(),
            price: r.iter().map(|x| price(&x.ticker)).collect(),
        }
    }

    /// Prices for P/B are the panel closes on the universe's book date, or the
    /// last panel date when the book date is not a trading day in the panel.
    pub fn from_panel(universe: &UniverseSnapshot, panel: &PricePanel) -> Self {
        let date = if panel.dates.contains(&universe.book_date) {
            universe.book_date.clone()
        } else {
            let last = panel.dates.last().cloned().unwrap_or_default();
            if universe.book_date.is_empty() {
                log::info!("no book date given; P/B uses closes on {last}");
            } else {
                log::warn!("book date `{}` not in price panel; P/B uses closes on {last}", universe.book_date);
            }
            last
        };
        CrossSection::new(universe, |t| {
            let i = panel.tickers.iter().position(|x| x == t)?;
            panel.price_on(i, &date)
        })
    }

    pub fn len(&self) -> usize {
        self.tickers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tickers.is_empty()
    }

    fn subset(&self, keep: &[usize]) -> CrossSection {
        CrossSection {
            tickers: keep.iter().map(|&i| self.tickers[i].clone()).collect(),
            market_cap: keep.iter().map(|&i| self.market_cap[i]).collect(),
            sector: keep.iter().map(|&i| self.sector[i].clone()).collect(),
            book_value_per_share: keep.iter().map(|&i| self.book_value_per_share[i]).collect(),
            price: keep.iter().map(|&i| self.price[i]).collect(),
        }
    }

    fn price_to_book(&self, i: usize) -> Result<f64> {
        let p = self.price[i]
            .ok_or_else(|| Error::data(&self.tickers[i], "no price for P/B"))?;
        let b = self.book_value_per_share[i];
        if b == 0.0 {
            return Err(Error::data(&self.tickers[i], "zero book value, P/B undefined"));
        }
        Ok(p / b)
    }

    fn value(&self, var: Variable, i: usize) -> Result<f64> {
        let t = &self.tickers[i];
        match var {
            Variable::LnCap => {
                let c = self.market_cap[i];
                if c > 0.0 && c.is_finite() {
                    Ok(c.ln())
                } else {
                    Err(Error::data(t, format!("market cap {c} has no logarithm")))
                }
            }
            Variable::PriceToBook => self.price_to_book(i),
            Variable::BookToPrice => {
                let p = self.price[i].ok_or_else(|| Error::data(t, "no price for B/P"))?;
                Ok(self.book_value_per_share[i] / p)
            }
            Variable::LnPriceToBook => {
                let pb = self.price_to_book(i)?;
                if pb > 0.0 {
                    Ok(pb.ln())
                } else {
                    Err(Error::data(t, format!("P/B {pb} has no logarithm")))
                }
            }
            Variable::Sectors | Variable::SectorsReduced => unreachable!("sector block"),
        }
    }
}

/// Named `N × K` matrix of explanatory variables.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix {
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub values: DMatrix<f64>,
}

pub const INTERCEPT: &str = "(Intercept)";

/// Assembles columns in declared order, with the intercept first when
/// requested. An intercept next to the full sector block is rejected.
pub fn build_design(
    cs: &CrossSection,
    variables: &[Variable],
    intercept: bool,
) -> Result<DesignMatrix> {
    if cs.is_empty() {
        return Err(Error::Empty("cross-section has no tickers".into()));
    }
    if intercept && variables.contains(&Variable::Sectors) {
        return Err(Error::Rank(
            "intercept plus the full sector block is collinear: sector indicators sum to 1; \
             drop the intercept or use sectors-1"
                .into(),
        ));
    }
    if variables.iter().filter(|v| v.is_sector_block()).count() > 1 {
        return Err(Error::Rank("sector block listed more than once".into()));
    }
    for (k, v) in variables.iter().enumerate() {
        if variables[..k].contains(v) {
            return Err(Error::Rank(format!("variable {v} listed twice")));
        }
    }
    let n = cs.len();
    let mut columns = Vec::new();
    let mut data: Vec<Vec<f64>> = Vec::new();
    if intercept {
        columns.push(INTERCEPT.to_owned());
        data.push(vec![1.0; n]);
    }
    for &var in variables {
        if var.is_sector_block() {
            let mut labels: Vec<&str> = cs.sector.iter().map(String::as_str).collect();
            labels.sort_unstable();
            labels.dedup();
            let skip = usize::from(var == Variable::SectorsReduced);
            for label in &labels[skip..] {
                columns.push((*label).to_owned());
                data.push(cs.sector.iter().map(|s| f64::from(s == label)).collect());
            }
        } else {
            columns.push(var.label().to_owned());
            data.push((0..n).map(|i| cs.value(var, i)).collect::<Result<_>>()?);
        }
    }
    if let Some(k) = data.iter().position(|c| c.iter().all(|&x| x == 0.0)) {
        return Err(Error::Rank(format!("column {} is identically zero", columns[k])));
    }
    let values = DMatrix::from_fn(n, columns.len(), |i, j| data[j][i]);
    Ok(DesignMatrix {
        rows: cs.tickers.clone(),
        columns,
        values,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegressionResult {
    pub variables: Vec<String>,
    pub estimate: Vec<f64>,
    pub std_error: Vec<f64>,
    pub t_statistic: Vec<f64>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    /// Overall F; infinite on an exact fit, NaN without explanatory columns.
    pub f_statistic: f64,
    pub df_model: usize,
    pub df_resid: usize,
    /// Whether R² and F are measured about the mean of `y`.
    pub centered: bool,
    pub exact_fit: bool,
    pub residuals: Vec<f64>,
    pub fitted: Vec<f64>,
}

impl RegressionResult {
    pub fn n_obs(&self) -> usize {
        self.residuals.len()
    }

    pub fn residual_std_error(&self) -> f64 {
        let sse: f64 = self.residuals.iter().map(|e| e * e).sum();
        (sse / self.df_resid as f64).sqrt()
    }
}

const RANK_TOL: f64 = 1e-10;

/// Least squares via Householder QR.
pub fn ols(y: &[f64], x: &DesignMatrix) -> Result<RegressionResult> {
    let (n, k) = x.values.shape();
    if y.len() != n {
        return Err(Error::param(
            "y",
            format!("length {} does not match {} design rows", y.len(), n),
        ));
    }
    if n <= k {
        return Err(Error::DegreesOfFreedom { rows: n, cols: k });
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::data(&x.rows[i], format!("regressand {} is not finite", y[i])));
    }
    let qr = x.values.clone().qr();
    let r = qr.r();
    let scale = (0..k).fold(0.0_f64, |m, j| m.max(r[(j, j)].abs()));
    if let Some(j) = (0..k).find(|&j| r[(j, j)].abs() <= RANK_TOL * scale) {
        return Err(Error::Rank(format!(
            "design is rank deficient at column {}",
            x.columns[j]
        )));
    }
    let yv = DVector::from_column_slice(y);
    let qty = qr.q().transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Rank("triangular solve failed".into()))?;
    let fitted = &x.values * &beta;
    let resid = &yv - &fitted;
    let sse = resid.norm_squared();
    let df_resid = n - k;
    let s2 = sse / df_resid as f64;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::Rank("triangular inverse failed".into()))?;
    let std_error: Vec<f64> = (0..k)
        .map(|j| (s2 * r_inv.row(j).norm_squared()).sqrt())
        .collect();

    let centered = constant_in_span(&qr.q(), n);
    let ybar = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = if centered {
        y.iter().map(|v| (v - ybar).powi(2)).sum()
    } else {
        y.iter().map(|v| v * v).sum()
    };
    let df_model = if centered { k - 1 } else { k };
    let exact_fit = sse <= 1e-24 * y.iter().map(|v| v * v).sum::<f64>();
    let r_squared = if exact_fit {
        1.0
    } else if tss > 0.0 {
        (1.0 - sse / tss).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let lead = usize::from(centered);
    let adj_r_squared = 1.0 - (1.0 - r_squared) * (n - lead) as f64 / df_resid as f64;
    let f_statistic = if df_model == 0 {
        f64::NAN
    } else if exact_fit {
        f64::INFINITY
    } else {
        ((tss - sse).max(0.0) / df_model as f64) / s2
    };
    let estimate: Vec<f64> = beta.iter().copied().collect();
    let t_statistic = estimate.iter().zip(&std_error).map(|(b, s)| b / s).collect();
    Ok(RegressionResult {
        variables: x.columns.clone(),
        estimate,
        std_error,
        t_statistic,
        r_squared,
        adj_r_squared,
        f_statistic,
        df_model,
        df_resid,
        centered,
        exact_fit,
        residuals: resid.iter().copied().collect(),
        fitted: fitted.iter().copied().collect(),
    })
}

/// Whether the ones vector lies in the span of the orthonormal columns `q`.
fn constant_in_span(q: &DMatrix<f64>, n: usize) -> bool {
    let ones = DVector::from_element(n, 1.0);
    let proj = q * (q.transpose() * &ones);
    (ones - proj).norm() <= 1e-8 * (n as f64).sqrt()
}

/// Tickers kept by [`filter_universe`] and the per-sector counts around it.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterReport {
    pub kept: Vec<usize>,
    pub zero_book: usize,
    pub negative_book: usize,
    pub before: BTreeMap<String, usize>,
    pub after: BTreeMap<String, usize>,
}

/// Keeps tickers with positive book value.
pub fn filter_universe(cs: &CrossSection) -> (CrossSection, FilterReport) {
    let count = |idx: &mut dyn Iterator<Item = usize>| {
        let mut m = BTreeMap::new();
        for i in idx {
            *m.entry(cs.sector[i].clone()).or_insert(0) += 1;
        }
        m
    };
    let kept: Vec<usize> = (0..cs.len())
        .filter(|&i| cs.book_value_per_share[i] > 0.0)
        .collect();
    let before = count(&mut (0..cs.len()));
    let mut after = count(&mut kept.iter().copied());
    for s in before.keys() {
        after.entry(s.clone()).or_insert(0);
    }
    let report = FilterReport {
        zero_book: cs.book_value_per_share.iter().filter(|&&b| b == 0.0).count(),
        negative_book: cs.book_value_per_share.iter().filter(|&&b| b < 0.0).count(),
        before,
        after,
        kept: kept.clone(),
    };
    (cs.subset(&kept), report)
}

impl FilterReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sector,before,after\n");
        for (s, b) in &self.before {
            let _ = writeln!(out, "{s},{b},{}", self.after[s]);
        }
        out
    }
}

/// A named regression specification.
#[derive(Clone, Debug, PartialEq)]
pub struct Spec {
    pub name: String,
    pub variables: Vec<Variable>,
    pub intercept: bool,
}

impl Spec {
    pub fn new(name: &str, variables: &[Variable], intercept: bool) -> Self {
        Spec {
            name: name.to_owned(),
            variables: variables.to_vec(),
            intercept,
        }
    }

    /// Parses `intercept+lncap+sectors`-style lists.
    pub fn parse(name: &str, list: &str) -> Result<Self> {
        let mut intercept = false;
        let mut variables = Vec::new();
        for part in list.split(['+', ',']).map(str::trim).filter(|p| !p.is_empty()) {
            if part.eq_ignore_ascii_case("intercept") {
                intercept = true;
            } else {
                variables.push(part.parse()?);
            }
        }
        if variables.is_empty() && !intercept {
            return Err(Error::param("variables", "specification is empty"));
        }
        Ok(Spec {
            name: name.to_owned(),
            variables,
            intercept,
        })
    }

    pub fn uses_book(&self) -> bool {
        self.variables.iter().any(|v| v.uses_book())
    }

    pub fn formula(&self) -> String {
        let mut parts: Vec<&str> = Vec::new();
        if self.intercept {
            parts.push("intercept");
        }
        parts.extend(self.variables.iter().map(|v| v.as_str()));
        parts.join("+")
    }
}

/// The six standard specifications: size alone, size with sectors, size with
/// each price-to-book variant, and size with sectors and ln(P/B).
pub fn standard_specs() -> Vec<Spec> {
    use Variable::*;
    vec![
        Spec::new("lncap", &[LnCap], true),
        Spec::new("lncap_sectors", &[LnCap, Sectors], false),
        Spec::new("lncap_pb", &[LnCap, PriceToBook], true),
        Spec::new("lncap_bp", &[LnCap, BookToPrice], true),
        Spec::new("lncap_lnpb", &[LnCap, LnPriceToBook], true),
        Spec::new("lncap_sectors_lnpb", &[LnCap, Sectors, LnPriceToBook], false),
    ]
}

/// Runs one specification, restricting to positive book value when it uses
/// book-based variables.
pub fn run_spec(spec: &Spec, cs: &CrossSection, y: &[f64]) -> Result<(RegressionResult, Option<FilterReport>)> {
    let (cs, y, report) = if spec.uses_book() {
        let (kept, report) = filter_universe(cs);
        let y: Vec<f64> = report.kept.iter().map(|&i| y[i]).collect();
        (kept, y, Some(report))
    } else {
        (cs.clone(), y.to_vec(), None)
    };
    let x = build_design(&cs, &spec.variables, spec.intercept)?;
    Ok((ols(&y, &x)?, report))
}

pub const REPORT_HEADER: &str = "spec,variable,estimate,std_error,t_statistic,overall";

/// Coefficient rows followed by the overall-fit rows.
pub fn report_csv(spec: &Spec, res: &RegressionResult) -> String {
    let mut out = String::new();
    let name = &spec.name;
    for j in 0..res.variables.len() {
        let _ = writeln!(
            out,
            "{name},{},{},{},{},",
            csv_field(&res.variables[j]),
            fmt_f64(res.estimate[j]),
            fmt_f64(res.std_error[j]),
            fmt_f64(res.t_statistic[j]),
        );
    }
    for (label, v) in overall_rows(res) {
        let _ = writeln!(out, "{name},{label},,,,{v}");
    }
    out
}

fn overall_rows(res: &RegressionResult) -> [(&'static str, String); 6] {
    [
        ("observations", res.n_obs().to_string()),
        ("multiple_r_squared", fmt_f64(res.r_squared)),
        ("adjusted_r_squared", fmt_f64(res.adj_r_squared)),
        ("f_statistic", fmt_f64(res.f_statistic)),
        ("f_df_model", res.df_model.to_string()),
        ("f_df_resid", res.df_resid.to_string()),
    ]
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn fixed(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else {
        format!("{x}")
    }
}

/// Aligned-text rendering of one regression.
pub fn report_text(spec: &Spec, res: &RegressionResult) -> String {
    let rows: Vec<[String; 4]> = res
        .variables
        .iter()
        .enumerate()
        .map(|(j, v)| {
            [
                v.clone(),
                fixed(res.estimate[j]),
                fixed(res.std_error[j]),
                fixed(res.t_statistic[j]),
            ]
        })
        .collect();
    let head = ["Variable", "Estimate", "Std. error", "t-statistic"];
    let mut width = head.map(str::len);
    for row in &rows {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "{} [{}], n = {}", spec.name, spec.formula(), res.n_obs());
    let line = |out: &mut String, cells: [&str; 4]| {
        let _ = writeln!(
            out,
            "{:<w0$}  {:>w1$}  {:>w2$}  {:>w3$}",
            cells[0],
            cells[1],
            cells[2],
            cells[3],
            w0 = width[0],
            w1 = width[1],
            w2 = width[2],
            w3 = width[3]
        );
    };
    line(&mut out, head);
    for row in &rows {
        line(&mut out, [&row[0], &row[1], &row[2], &row[3]]);
    }
    let _ = writeln!(
        out,
        "Multiple R-squared: {}, Adjusted R-squared: {}",
        fixed(res.r_squared),
        fixed(res.adj_r_squared)
    );
    let _ = writeln!(
        out,
        "F-statistic: {} on {} and {} DF{}",
        fixed(res.f_statistic),
        res.df_model,
        res.df_resid,
        if res.exact_fit { " (exact fit)" } else { "" }
    );
    out
}
