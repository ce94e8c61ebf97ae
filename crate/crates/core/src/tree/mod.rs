//! Discrete binary-tree price process.
//!
//! The additive walk `W` moves by `±√τ` each step with up-probability
//! `p = (1 + μ√τ)/2`; prices are `S_n = (1-d)^n · S₀ · exp(σ W_n)` and a
//! fraction `d` of the pre-drop price is paid out as cash on every step.

mod closed_form;
mod ensemble;

pub use closed_form::{
    atm_call_price, dividends_expected, dividends_most_probable, drift_lower_bound, drift_nu,
    effective_drift, expected_price, expected_price_product_form, loss_probability, median_price,
    most_probable_path, step_probability, walk_drift_for, walk_mean_variance,
};
pub use ensemble::{mc_ensemble, mc_sample, CheckpointStats, EnsembleSample, EnsembleStats};

use crate::error::{Error, Result};
use crate::rng::{Bernoulli, PathRng};

/// Model constants for one tree configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeParams {
    /// Log-volatility per √(unit time).
    pub sigma: f64,
    /// Drift of the additive walk per unit time.
    pub mu: f64,
    /// Time step.
    pub tau: f64,
    pub n_steps: usize,
    pub s0: f64,
    /// Per-step dividend fraction in [0, 1).
    pub dividend: f64,
}

impl TreeParams {
    pub fn new(sigma: f64, mu: f64, tau: f64, n_steps: usize, s0: f64) -> Result<Self> {
        Self {
            sigma,
            mu,
            tau,
            n_steps,
            s0,
            dividend: 0.0,
        }
        .validated()
    }

    /// Parameters whose walk drift is chosen so that the price drift equals `nu`.
    pub fn with_target_drift(
        sigma: f64,
        nu: f64,
        tau: f64,
        n_steps: usize,
        s0: f64,
    ) -> Result<Self> {
        let mu = walk_drift_for(sigma, nu, tau)?;
        Self::new(sigma, mu, tau, n_steps, s0)
    }

    pub fn with_dividend(mut self, d: f64) -> Result<Self> {
        self.dividend = d;
        self.validated()
    }

    pub fn with_steps(mut self, n_steps: usize) -> Result<Self> {
        self.n_steps = n_steps;
        self.validated()
    }

    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_sigma_tau(self.sigma, self.tau)?;
        step_probability(self.mu, self.tau)?;
        if self.n_steps == 0 {
            return Err(Error::param("n_steps", "must be at least 1"));
        }
        if !(self.s0 > 0.0 && self.s0.is_finite()) {
            return Err(Error::param("s0", format!("must be positive, got {}", self.s0)));
        }
        if !(0.0..1.0).contains(&self.dividend) {
            return Err(Error::param(
                "dividend",
                format!("must lie in [0, 1), got {}", self.dividend),
            ));
        }
        Ok(())
    }

    pub fn up_probability(&self) -> f64 {
        0.5 * (1.0 + self.mu * self.tau.sqrt())
    }

    /// Price drift ν of this configuration.
    pub fn nu(&self) -> f64 {
        closed_form::nu_unchecked(self.sigma, self.mu, self.tau)
    }

    pub fn horizon(&self) -> f64 {
        self.n_steps as f64 * self.tau
    }

    pub(crate) fn check_step(&self, n: usize) -> Result<()> {
        if n > self.n_steps {
            return Err(Error::StepOutOfRange {
                index: n,
                max: self.n_steps,
            });
        }
        Ok(())
    }

    /// ln(1 - d), exact near d = 0.
    pub(crate) fn ln_retention(&self) -> f64 {
        (-self.dividend).ln_1p()
    }
}

pub(crate) fn check_sigma_tau(sigma: f64, tau: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param("sigma", format!("must be positive, got {sigma}")));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::param("tau", format!("must be positive, got {tau}")));
    }
    Ok(())
}

/// One realization of the additive walk.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkPath {
    /// W_0..W_N.
    pub values: Vec<f64>,
    pub seed: u64,
    pub stream: u64,
    pub tau: f64,
}

impl WalkPath {
    pub fn len_steps(&self) -> usize {
        self.values.len() - 1
    }
}

/// Prices and cumulative cash dividends derived from a walk.
#[derive(Clone, Debug, PartialEq)]
pub struct PricePath {
    pub prices: Vec<f64>,
    pub dividends_cum: Vec<f64>,
}

impl PricePath {
    pub fn from_walk(params: &TreeParams, walk: &WalkPath) -> Self {
        let ln_ret = params.ln_retention();
        let prices: Vec<f64> = walk
            .values
            .iter()
            .enumerate()
            .map(|(n, w)| params.s0 * (n as f64 * ln_ret + params.sigma * w).exp())
            .collect();
        let mut dividends_cum = Vec::with_capacity(prices.len());
        let mut acc = 0.0;
        dividends_cum.push(acc);
        for m in 1..prices.len() {
            // the cash paid at t_m is d times the pre-drop price (1-d)^{m-1} S0 e^{σ W_m}
            if params.dividend > 0.0 {
                acc += params.dividend * prices[m] / (1.0 - params.dividend);
            }
            dividends_cum.push(acc);
        }
        Self {
            prices,
            dividends_cum,
        }
    }
}

/// Simulates the walk on stream 0 of `seed`.
pub fn simulate_walk(params: &TreeParams, seed: u64) -> Result<WalkPath> {
    simulate_walk_stream(params, seed, 0)
}

/// Simulates the walk on an explicit stream; ensemble path `i` uses stream `i`.
pub fn simulate_walk_stream(params: &TreeParams, seed: u64, stream: u64) -> Result<WalkPath> {
    params.validate()?;
    let step = params.tau.sqrt();
    let coin = Bernoulli::new(params.up_probability());
    let mut rng = PathRng::new(seed, stream);
    let mut k: i64 = 0;
    let mut values = Vec::with_capacity(params.n_steps + 1);
    values.push(0.0);
    for _ in 0..params.n_steps {
        k += if coin.sample(&mut rng) { 1 } else { -1 };
        values.push(k as f64 * step);
    }
    Ok(WalkPath {
        values,
        seed,
        stream,
        tau: params.tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> TreeParams {
        TreeParams::new(0.3, 0.1, 1.0 / 252.0, 500, 100.0).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(TreeParams::new(0.0, 0.0, 1.0, 1, 1.0).is_err());
        assert!(TreeParams::new(0.2, 0.0, -1.0, 1, 1.0).is_err());
        assert!(TreeParams::new(0.2, 2.0, 1.0, 1, 1.0).is_err());
        assert!(TreeParams::new(0.2, 0.0, 1.0, 0, 1.0).is_err());
        assert!(TreeParams::new(0.2, 0.0, 1.0, 1, 0.0).is_err());
        assert!(base().with_dividend(1.0).is_err());
        assert!(base().with_dividend(-0.1).is_err());
        assert!(base().with_dividend(0.5).is_ok());
    }

    #[test]
    fn walk_is_deterministic_per_seed() {
        let p = base();
        assert_eq!(simulate_walk(&p, 11).unwrap(), simulate_walk(&p, 11).unwrap());
        assert_ne!(
            simulate_walk(&p, 11).unwrap().values,
            simulate_walk(&p, 12).unwrap().values
        );
    }

    #[test]
    fn single_unit_step_is_plus_or_minus_one() {
        let p = TreeParams::new(1.0, 0.0, 1.0, 1, 1.0).unwrap();
        for seed in 0..50 {
            let w = simulate_walk(&p, seed).unwrap();
            assert_eq!(w.values[0], 0.0);
            assert!(w.values[1] == 1.0 || w.values[1] == -1.0);
        }
    }

    #[test]
    fn increments_are_exactly_root_tau() {
        let p = base();
        let w = simulate_walk(&p, 5).unwrap();
        let step = p.tau.sqrt();
        for pair in w.values.windows(2) {
            assert!(((pair[1] - pair[0]).abs() - step).abs() <= 1e-12 * step);
        }
    }

    #[test]
    fn price_path_reconstructs_from_walk() {
        let p = base().with_dividend(0.002).unwrap();
        let w = simulate_walk(&p, 3).unwrap();
        let path = PricePath::from_walk(&p, &w);
        for (n, (s, wn)) in path.prices.iter().zip(&w.values).enumerate() {
            let back = s * (1.0 - p.dividend).powi(-(n as i32)) / p.s0;
            let expect = (p.sigma * wn).exp();
            assert!((back - expect).abs() <= 1e-12 * expect, "n={n}");
        }
        assert_eq!(path.dividends_cum[0], 0.0);
        assert!(path.dividends_cum.windows(2).all(|d| d[1] >= d[0]));
    }

    #[test]
    fn dividends_follow_the_defining_sum() {
        let p = base().with_dividend(0.01).unwrap().with_steps(40).unwrap();
        let w = simulate_walk(&p, 8).unwrap();
        let path = PricePath::from_walk(&p, &w);
        let mut direct = 0.0;
        for m in 1..=40 {
            direct += p.dividend
                * (1.0 - p.dividend).powi(m as i32 - 1)
                * p.s0
                * (p.sigma * w.values[m]).exp();
            assert!((path.dividends_cum[m] - direct).abs() <= 1e-12 * direct);
        }
    }

    #[test]
    fn no_dividend_means_no_cash() {
        let p = base();
        let w = simulate_walk(&p, 1).unwrap();
        assert!(PricePath::from_walk(&p, &w)
            .dividends_cum
            .iter()
            .all(|&d| d == 0.0));
    }
}
