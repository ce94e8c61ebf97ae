//! Position/velocity uncertainty on the tree and on probability densities.
//!
//! On a binary walk with steps `±√τ` the midpoint velocity is
//! `v = (W_{n+1} − W_n)/τ` and the time-ordered commutator
//! `W_{n+1}·v − v·W_n = τ v²` is exactly 1 on every step.
//!
//! For a density `P(x)` the velocity field is `v(x) = −d/dx ln P(x)`, and the
//! Cauchy–Schwarz inequality gives `σ_x σ_v ≥ 1`, with equality only for
//! Gaussians.

use std::fs::File;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tree::{simulate_walk_stream, TreeParams, WalkPath};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommutatorSample {
    pub step: usize,
    pub value: f64,
}

/// `G_{n,n+1}` on one step of `walk`.
pub fn commutator_step(walk: &WalkPath, n: usize) -> Result<CommutatorSample> {
    let steps = walk.len_steps();
    if n >= steps {
        return Err(Error::StepOutOfRange {
            index: n,
            max: steps.saturating_sub(1),
        });
    }
    let (w0, w1) = (walk.values[n], walk.values[n + 1]);
    let v = (w1 - w0) / walk.tau;
    Ok(CommutatorSample {
        step: n,
        value: w1 * v - v * w0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommutatorSummary {
    pub n_paths: usize,
    pub n_steps: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Largest `|G − 1|` seen.
    pub max_deviation: f64,
}

/// Evaluates every step of `n_paths` seeded walks drawn with `params`.
pub fn commutator_check(params: &TreeParams, n_paths: usize, seed: u64) -> Result<CommutatorSummary> {
    params.validate()?;
    if n_paths == 0 || params.n_steps == 0 {
        return Err(Error::param("n_paths", "need at least one path and one step"));
    }
    let per_path: Vec<(f64, f64, f64)> = (0..n_paths as u64)
        .into_par_iter()
        .map(|stream| {
            let walk = simulate_walk_stream(params, seed, stream)?;
            let mut acc = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
            for n in 0..walk.len_steps() {
                let g = commutator_step(&walk, n)?.value;
                acc = (acc.0.min(g), acc.1.max(g), acc.2 + g);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let total = (n_paths * params.n_steps) as f64;
    let min = per_path.iter().map(|a| a.0).fold(f64::INFINITY, f64::min);
    let max = per_path.iter().map(|a| a.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(CommutatorSummary {
        n_paths,
        n_steps: params.n_steps,
        min,
        max,
        mean: per_path.iter().map(|a| a.2).sum::<f64>() / total,
        max_deviation: (min - 1.0).abs().max((max - 1.0).abs()),
    })
}

/// Tolerance on the trapezoid integral of a normalized density.
pub const NORMALIZATION_TOL: f64 = 1e-6;
/// Endpoint density relative to the peak must stay below this.
pub const TAIL_TOL: f64 = 1e-10;
pub const DEFAULT_POINTS: usize = 4097;

/// A normalized density sampled on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid {
    lo: f64,
    h: f64,
    p: Vec<f64>,
}

impl DensityGrid {
    /// Accepts samples on `[lo, hi]` that already integrate to 1.
    pub fn new(lo: f64, hi: f64, p: Vec<f64>) -> Result<Self> {
        let grid = Self::unchecked(lo, hi, p)?;
        let total = grid.integral();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Domain(format!(
                "density integrates to {total}, not 1"
            )));
        }
        grid.check_tails()?;
        Ok(grid)
    }

    /// Rescales samples on `[lo, hi]` to unit mass.
    pub fn normalized(lo: f64, hi: f64, mut p: Vec<f64>) -> Result<Self> {
        let total = Self::unchecked(lo, hi, p.clone())?.integral();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Domain(format!("density has mass {total}")));
        }
        p.iter_mut().for_each(|v| *v /= total);
        let grid = Self::unchecked(lo, hi, p)?;
        grid.check_tails()?;
        Ok(grid)
    }

    /// Samples `f` at `points` nodes on `[lo, hi]` and normalizes.
    pub fn from_fn(lo: f64, hi: f64, points: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if points < 3 {
            return Err(Error::param("points", "need at least 3 grid points"));
        }
        let h = (hi - lo) / (points - 1) as f64;
        let p = (0..points).map(|i| f(lo + i as f64 * h)).collect();
        Self::normalized(lo, hi, p)
    }

    fn unchecked(lo: f64, hi: f64, p: Vec<f64>) -> Result<Self> {
        if p.len() < 3 {
            return Err(Error::param("points", "need at least 3 grid points"));
        }
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::param("grid", format!("bad interval [{lo}, {hi}]")));
        }
        if let Some(v) = p.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Domain(format!("density value {v} is negative or not finite")));
        }
        let h = (hi - lo) / (p.len() - 1) as f64;
        Ok(DensityGrid { lo, h, p })
    }

    fn check_tails(&self) -> Result<()> {
        let peak = self.p.iter().fold(0.0_f64, |m, &v| m.max(v));
        let edge = self.p[0].max(*self.p.last().unwrap());
        if edge >= TAIL_TOL * peak {
            return Err(Error::Domain(format!(
                "density does not decay at the grid ends (edge/peak = {:e}); widen the grid",
                edge / peak
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn x(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.h
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i)).collect()
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn integral(&self) -> f64 {
        self.quad(|_, p| p)
    }

    /// Trapezoid rule for `∫ g(x, P(x)) dx`.
    fn quad(&self, g: impl Fn(f64, f64) -> f64) -> f64 {
        let n = self.len();
        let inner: f64 = (1..n - 1).map(|i| g(self.x(i), self.p[i])).sum();
        self.h * (inner + 0.5 * (g(self.x(0), self.p[0]) + g(self.x(n - 1), self.p[n - 1])))
    }

    fn quad_weighted(&self, w: &[f64]) -> f64 {
        let n = self.len();
        let inner: f64 = (1..n - 1).map(|i| w[i] * self.p[i]).sum();
        self.h * (inner + 0.5 * (w[0] * self.p[0] + w[n - 1] * self.p[n - 1]))
    }

    /// Reads a two-column `x,p` CSV on a uniform grid and normalizes it.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let parse_err = |line, reason: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let header = reader.headers().map_err(csv_err)?.clone();
        if header.len() != 2 {
            return Err(parse_err(1, "density file needs exactly two columns x,p".into()));
        }
        let (mut xs, mut ps) = (Vec::new(), Vec::new());
        for record in reader.records() {
            let record = record.map_err(csv_err)?;
            let line = record.position().map_or(0, |p| p.line());
            let num = |k: usize| {
                record[k]
                    .parse::<f64>()
                    .map_err(|_| parse_err(line, format!("`{}` is not a number", &record[k])))
            };
            xs.push(num(0)?);
            ps.push(num(1)?);
        }
        if xs.len() < 3 {
            return Err(Error::Empty(format!("{} has fewer than 3 rows", path.display())));
        }
        let (lo, hi) = (xs[0], *xs.last().unwrap());
        let h = (hi - lo) / (xs.len() - 1) as f64;
        for (i, x) in xs.iter().enumerate() {
            if (x - (lo + i as f64 * h)).abs() > 1e-9 * h.abs().max(x.abs()) {
                return Err(parse_err(i as u64 + 2, format!("x = {x} breaks the uniform grid")));
            }
        }
        Self::normalized(lo, hi, ps)
    }
}

/// Second-order finite differences of `ln p` with spacing `h`, negated:
/// central in the interior, one-sided at the ends.
pub fn log_derivative_velocity(p: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = p.len();
    if n < 3 {
        return Err(Error::param("points", "need at least 3 grid points"));
    }
    if let Some(i) = (1..n - 1).find(|&i| !(p[i] > 0.0)) {
        return Err(Error::Domain(format!(
            "density is {} at interior grid point {i}; velocity undefined",
            p[i]
        )));
    }
    let q: Vec<f64> = p.iter().map(|v| v.ln()).collect();
    let mut v = vec![0.0; n];
    for i in 1..n - 1 {
        v[i] = -(q[i + 1] - q[i - 1]) / (2.0 * h);
    }
    v[0] = if p[0] > 0.0 {
        -(-3.0 * q[0] + 4.0 * q[1] - q[2]) / (2.0 * h)
    } else {
        v[1]
    };
    v[n - 1] = if p[n - 1] > 0.0 {
        -(3.0 * q[n - 1] - 4.0 * q[n - 2] + q[n - 3]) / (2.0 * h)
    } else {
        v[n - 2]
    };
    Ok(v)
}

/// `v(x) = −(ln P)′(x)` at every grid point.
pub fn velocity_field(density: &DensityGrid) -> Result<Vec<f64>> {
    log_derivative_velocity(density.p(), density.spacing())
}

/// Mean position `x*`.
pub fn mean_x(density: &DensityGrid) -> f64 {
    density.quad(|x, p| x * p)
}

pub fn sigma_x(density: &DensityGrid) -> f64 {
    let m = mean_x(density);
    density.quad(|x, p| (x - m) * (x - m) * p).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VelocityMoments {
    /// Mean velocity `v_*`, zero for any decaying density.
    pub v_star: f64,
    pub sigma_v: f64,
}

/// Tolerance on `|v_*| / σ_v`.
pub const V_STAR_TOL: f64 = 1e-6;

/// `σ_v² = ∫ v² P dx` and `v_* = ∫ v P dx`.
pub fn sigma_v(density: &DensityGrid) -> Result<VelocityMoments> {
    let v = velocity_field(density)?;
    let v_star = density.quad_weighted(&v);
    let v2: Vec<f64> = v.iter().map(|x| x * x).collect();
    let sigma_v = density.quad_weighted(&v2).sqrt();
    if v_star.abs() > V_STAR_TOL * sigma_v {
        return Err(Error::Domain(format!(
            "mean velocity {v_star:e} is not zero relative to sigma_v = {sigma_v}; refine the grid"
        )));
    }
    Ok(VelocityMoments { v_star, sigma_v })
}

/// Slack allowed below 1 for quadrature error.
pub const PRODUCT_TOL: f64 = 1e-6;

/// `σ_x σ_v`, which must be at least 1 up to [`PRODUCT_TOL`].
pub fn uncertainty_product(density: &DensityGrid) -> Result<f64> {
    let product = sigma_x(density) * sigma_v(density)?.sigma_v;
    if product < 1.0 - PRODUCT_TOL {
        return Err(Error::Domain(format!(
            "sigma_x * sigma_v = {product} < 1; grid too coarse for this density"
        )));
    }
    Ok(product)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Saturation {
    pub sigma_x: f64,
    pub sigma_v: f64,
    pub v_star: f64,
    pub product: f64,
    /// Best-fit `α` in `(x − x*) P = α P′`.
    pub alpha: f64,
    /// `‖(x − x*) P − α P′‖ / ‖(x − x*) P‖` over the grid.
    pub residual: f64,
}

impl Saturation {
    pub fn is_gaussian(&self, tol: f64) -> bool {
        self.residual < tol
    }
}

/// Product and the least-squares residual of the saturation condition.
pub fn saturation_check(density: &DensityGrid) -> Result<Saturation> {
    let sx = sigma_x(density);
    let VelocityMoments { v_star, sigma_v } = sigma_v(density)?;
    let product = sx * sigma_v;
    if product < 1.0 - PRODUCT_TOL {
        return Err(Error::Domain(format!("sigma_x * sigma_v = {product} < 1")));
    }
    let m = mean_x(density);
    let v = velocity_field(density)?;
    let a: Vec<f64> = (0..density.len()).map(|i| (density.x(i) - m) * density.p[i]).collect();
    let b: Vec<f64> = v.iter().zip(&density.p).map(|(v, p)| -v * p).collect();
    let bb: f64 = b.iter().map(|x| x * x).sum();
    let alpha = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / bb;
    let num: f64 = a.iter().zip(&b).map(|(x, y)| (x - alpha * y).powi(2)).sum();
    let den: f64 = a.iter().map(|x| x * x).sum();
    Ok(Saturation {
        sigma_x: sx,
        sigma_v,
        v_star,
        product,
        alpha,
        residual: (num / den).sqrt(),
    })
}

/// One component of a Gaussian mixture.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    pub sd: f64,
}

/// Named density families.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Gaussian { center: f64, width: f64 },
    /// `exp(−|x − center|/width) / (2 width)`.
    Laplace { center: f64, width: f64 },
    Logistic { center: f64, scale: f64 },
    Mixture(Vec<Component>),
    /// Flat top of half-width `half_width` with logistic shoulders of scale `edge`.
    Plateau { center: f64, half_width: f64, edge: f64 },
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive and finite, got {v}")))
    }
}

impl FromStr for Family {
    type Err = Error;

    /// `gaussian:center:width`, `laplace:center:width`, `logistic:center:scale`,
    /// `plateau:center:half_width:edge`, or `mixture:w:m:s[:w:m:s...]`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':').map(str::trim);
        let name = parts.next().unwrap_or_default().to_ascii_lowercase();
        let nums = parts
            .map(|p| {
                p.parse::<f64>()
                    .map_err(|_| Error::param("density", format!("`{p}` in `{s}` is not a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let arity = |n: usize| {
            if nums.len() == n {
                Ok(())
            } else {
                Err(Error::param("density", format!("`{name}` takes {n} numbers, got {} in `{s}`", nums.len())))
            }
        };
        let fam = match name.as_str() {
            "gaussian" => {
                arity(2)?;
                Family::Gaussian { center: nums[0], width: nums[1] }
            }
            "laplace" => {
                arity(2)?;
                Family::Laplace { center: nums[0], width: nums[1] }
            }
            "logistic" => {
                arity(2)?;
                Family::Logistic { center: nums[0], scale: nums[1] }
            }
            "plateau" => {
                arity(3)?;
                Family::Plateau { center: nums[0], half_width: nums[1], edge: nums[2] }
            }
            "mixture" => {
                if nums.is_empty() || nums.len() % 3 != 0 {
                    return Err(Error::param("density", format!("mixture takes weight:mean:sd triples, got `{s}`")));
                }
                Family::Mixture(
                    nums.chunks(3)
                        .map(|c| Component { weight: c[0], mean: c[1], sd: c[2] })
                        .collect(),
                )
            }
            other => return Err(Error::param("density", format!("unknown family `{other}`"))),
        };
        fam.validate()?;
        Ok(fam)
    }
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian { .. } => "gaussian",
            Family::Laplace { .. } => "laplace",
            Family::Logistic { .. } => "logistic",
            Family::Mixture(_) => "mixture",
            Family::Plateau { .. } => "plateau",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Family::Gaussian { width, .. } | Family::Laplace { width, .. } => positive("width", *width),
            Family::Logistic { scale, .. } => positive("scale", *scale),
            Family::Plateau { half_width, edge, .. } => {
                positive("half_width", *half_width)?;
                positive("edge", *edge)
            }
            Family::Mixture(cs) => {
                if cs.is_empty() {
                    return Err(Error::param("components", "mixture needs a component"));
                }
                for c in cs {
                    positive("weight", c.weight)?;
                    positive("sd", c.sd)?;
                }
                Ok(())
            }
        }
    }

    /// Points used when none are requested. Laplace takes an even count so
    /// the kink sits midway between nodes.
    pub fn default_points(&self) -> usize {
        match self {
            Family::Laplace { .. } => 8192,
            Family::Mixture(cs) => {
                let (lo, hi) = self.support();
                let finest = cs.iter().map(|c| c.sd).fold(f64::INFINITY, f64::min);
                DEFAULT_POINTS.max(((hi - lo) / (finest / 1000.0)).ceil() as usize + 1)
            }
            _ => DEFAULT_POINTS,
        }
    }

    /// Grid interval, symmetric about the center for the symmetric families.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Family::Gaussian { center, width } => (center - 12.0 * width, center + 12.0 * width),
            Family::Laplace { center, width } => (center - 24.0 * width, center + 24.0 * width),
            Family::Logistic { center, scale } => (center - 30.0 * scale, center + 30.0 * scale),
            Family::Plateau { center, half_width, edge } => {
                let r = half_width + 20.0 * edge;
                (center - r, center + r)
            }
            Family::Mixture(ref cs) => (
                cs.iter().map(|c| c.mean - 12.0 * c.sd).fold(f64::INFINITY, f64::min),
                cs.iter().map(|c| c.mean + 12.0 * c.sd).fold(f64::NEG_INFINITY, f64::max),
            ),
        }
    }

    /// Unnormalized log density.
    fn ln_pdf(&self, x: f64) -> f64 {
        match *self {
            Family::Gaussian { center, width } => -0.5 * ((x - center) / width).powi(2),
            Family::Laplace { center, width } => -(x - center).abs() / width,
            Family::Logistic { center, scale } => {
                let z = ((x - center) / scale).abs();
                -z - 2.0 * (-z).exp().ln_1p()
            }
            Family::Plateau { center, half_width, edge } => {
                // tanh((y+L)/w) - tanh((y-L)/w) = sinh(2L/w) / (cosh((y+L)/w) cosh((y-L)/w))
                let y = x - center;
                -ln_cosh((y + half_width) / edge) - ln_cosh((y - half_width) / edge)
            }
            Family::Mixture(ref cs) => {
                let terms: Vec<f64> = cs
                    .iter()
                    .map(|c| c.weight.ln() - c.sd.ln() - 0.5 * ((x - c.mean) / c.sd).powi(2))
                    .collect();
                let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
            }
        }
    }

    pub fn grid(&self, points: Option<usize>) -> Result<DensityGrid> {
        self.validate()?;
        let (lo, hi) = self.support();
        let points = points.unwrap_or_else(|| self.default_points());
        DensityGrid::from_fn(lo, hi, points, |x| self.ln_pdf(x).exp())
    }

    /// Closed-form `σ_x σ_v` where one exists.
    pub fn analytic_product(&self) -> Option<f64> {
        match self {
            Family::Gaussian { .. } => Some(1.0),
            Family::Laplace { .. } => Some(std::f64::consts::SQRT_2),
            Family::Logistic { .. } => Some(std::f64::consts::PI / 3.0),
            _ => None,
        }
    }

    /// Closed-form `σ_x` where one exists.
    pub fn analytic_sigma_x(&self) -> Option<f64> {
        match self {
            Family::Gaussian { width, .. } => Some(*width),
            Family::Laplace { width, .. } => Some(std::f64::consts::SQRT_2 * width),
            Family::Logistic { scale, .. } => Some(scale * std::f64::consts::PI / 3f64.sqrt()),
            Family::Mixture(cs) => {
                let total: f64 = cs.iter().map(|c| c.weight).sum();
                let m1: f64 = cs.iter().map(|c| c.weight * c.mean).sum::<f64>() / total;
                let m2: f64 = cs
                    .iter()
                    .map(|c| c.weight * (c.sd * c.sd + c.mean * c.mean))
                    .sum::<f64>()
                    / total;
                Some((m2 - m1 * m1).sqrt())
            }
            Family::Plateau { .. } => None,
        }
    }
}

fn ln_cosh(z: f64) -> f64 {
    let a = z.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}
