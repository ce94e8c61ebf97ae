//! Closed-form moments, drifts and dividend sums of the binary tree.
//!
//! With `a = σ√τ` and `m = μ√τ` every drift is `(1/τ)·ln(1 + small)`; the
//! small part is formed directly (`cosh a - 1 = 2 sinh²(a/2)`) and passed to
//! `ln_1p`, which keeps the τ → 0 regime accurate.

use libm::erf;

use super::{check_sigma_tau, TreeParams};
use crate::error::{Error, Result};
use crate::stats::Binomial;

/// Up-step probability `(1 + μ√τ)/2`.
pub fn step_probability(mu: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::param("tau", format!("must be positive, got {tau}")));
    }
    let m = mu * tau.sqrt();
    if !(m.abs() <= 1.0) {
        return Err(Error::param(
            "mu",
            format!("|mu|·sqrt(tau) = {} exceeds 1", m.abs()),
        ));
    }
    Ok(0.5 * (1.0 + m))
}

/// Mean and variance of `W_n`: `(μ t_n, t_n (1 - μ²τ))`.
pub fn walk_mean_variance(params: &TreeParams, n: usize) -> Result<(f64, f64)> {
    params.validate()?;
    params.check_step(n)?;
    let t = n as f64 * params.tau;
    Ok((
        params.mu * t,
        t * (1.0 - params.mu * params.mu * params.tau),
    ))
}

pub(crate) fn nu_unchecked(sigma: f64, mu: f64, tau: f64) -> f64 {
    let a = sigma * tau.sqrt();
    let m = mu * tau.sqrt();
    let half = (0.5 * a).sinh();
    (2.0 * half * half + m * a.sinh()).ln_1p() / tau
}

/// Exponential growth rate of the expected price,
/// `(1/τ)·ln[cosh(σ√τ) + μ√τ·sinh(σ√τ)]`. Tends to `σμ + σ²/2` as τ → 0.
pub fn drift_nu(sigma: f64, mu: f64, tau: f64) -> Result<f64> {
    check_sigma_tau(sigma, tau)?;
    step_probability(mu, tau)?;
    Ok(nu_unchecked(sigma, mu, tau))
}

/// `ν* = (1/τ)·ln cosh(σ√τ)`, the drift of the driftless walk.
pub fn drift_lower_bound(sigma: f64, tau: f64) -> Result<f64> {
    check_sigma_tau(sigma, tau)?;
    let half = (0.5 * sigma * tau.sqrt()).sinh();
    Ok((2.0 * half * half).ln_1p() / tau)
}

/// `ν_eff = (1/τ)·ln[1 + μ√τ·tanh(σ√τ)] = ν - ν*`.
pub fn effective_drift(sigma: f64, mu: f64, tau: f64) -> Result<f64> {
    check_sigma_tau(sigma, tau)?;
    let x = mu * tau.sqrt() * (sigma * tau.sqrt()).tanh();
    if !(x > -1.0) {
        return Err(Error::param(
            "mu",
            format!("1 + mu·sqrt(tau)·tanh(sigma·sqrt(tau)) = {} is not positive", 1.0 + x),
        ));
    }
    Ok(x.ln_1p() / tau)
}

/// Walk drift `μ` that produces price drift `nu`:
/// `μ = (e^{ντ} - cosh σ√τ) / (√τ sinh σ√τ)`.
pub fn walk_drift_for(sigma: f64, nu: f64, tau: f64) -> Result<f64> {
    check_sigma_tau(sigma, tau)?;
    let a = sigma * tau.sqrt();
    let half = (0.5 * a).sinh();
    let mu = ((nu * tau).exp_m1() - 2.0 * half * half) / (tau.sqrt() * a.sinh());
    step_probability(mu, tau).map_err(|_| {
        Error::param(
            "nu",
            format!("drift {nu} is not reachable with sigma={sigma}, tau={tau}"),
        )
    })?;
    Ok(mu)
}

/// `E(S_n) = (1-d)^n · S₀ · e^{ν t_n}`.
pub fn expected_price(params: &TreeParams, n: usize) -> Result<f64> {
    params.validate()?;
    params.check_step(n)?;
    let nf = n as f64;
    Ok(params.s0 * (nf * params.ln_retention() + params.nu() * params.tau * nf).exp())
}

/// `(1-d)^n · S₀ · [p e^{σ√τ} + q e^{-σ√τ}]^n`, the one-step-moment form of
/// [`expected_price`].
pub fn expected_price_product_form(params: &TreeParams, n: usize) -> Result<f64> {
    params.validate()?;
    params.check_step(n)?;
    let a = params.sigma * params.tau.sqrt();
    let p = params.up_probability();
    let one_step = p * a.exp() + (1.0 - p) * (-a).exp();
    let nf = n as f64;
    Ok(params.s0 * (nf * (params.ln_retention() + one_step.ln())).exp())
}

/// Most probable price `S₀ (1-d)^n exp(σ μ t_n)`.
pub fn most_probable_path(params: &TreeParams, n: usize) -> Result<f64> {
    params.validate()?;
    params.check_step(n)?;
    let nf = n as f64;
    Ok(params.s0 * (nf * params.ln_retention() + params.sigma * params.mu * params.tau * nf).exp())
}

/// `d · e^{rτ} · S₀ · Σ_{j<n} e^{-λτj}` with `λ = -ln(1-d)/τ - r`.
///
/// This is the cumulative dividend sum with `e^{σW_m}` replaced by `e^{r t_m}`.
/// `λ = 0` takes the limit `n · d · e^{rτ} · S₀`.
fn geometric_dividends(params: &TreeParams, rate: f64, n: usize) -> f64 {
    let d = params.dividend;
    if d == 0.0 || n == 0 {
        return 0.0;
    }
    let tau = params.tau;
    let lambda_tau = -params.ln_retention() - rate * tau;
    let leading = (d.ln() + rate * tau + params.s0.ln()).exp();
    let ratio = if lambda_tau == 0.0 {
        n as f64
    } else {
        (-lambda_tau * n as f64).exp_m1() / (-lambda_tau).exp_m1()
    };
    leading * ratio
}

/// Cumulative dividends along the most probable path (`W_m → μ t_m`).
pub fn dividends_most_probable(params: &TreeParams, n: usize) -> Result<f64> {
    params.validate()?;
    params.check_step(n)?;
    Ok(geometric_dividends(params, params.sigma * params.mu, n))
}

/// Expected cumulative dividends `E(D_n)`.
pub fn dividends_expected(params: &TreeParams, n: usize) -> Result<f64> {
    params.validate()?;
    params.check_step(n)?;
    Ok(geometric_dividends(params, params.nu(), n))
}

/// Zero-rate Black-Scholes price of the at-the-money call,
/// `S₀ · erf(σ√T / (2√2))`.
pub fn atm_call_price(s0: f64, sigma: f64, maturity: f64) -> Result<f64> {
    if !(s0 > 0.0 && s0.is_finite()) {
        return Err(Error::param("s0", format!("must be positive, got {s0}")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param("sigma", format!("must be positive, got {sigma}")));
    }
    if !(maturity >= 0.0 && maturity.is_finite()) {
        return Err(Error::param(
            "maturity",
            format!("must be nonnegative, got {maturity}"),
        ));
    }
    Ok(s0 * erf(sigma * maturity.sqrt() / (2.0 * std::f64::consts::SQRT_2)))
}

fn log_price_at(params: &TreeParams, n: usize, ups: u64) -> f64 {
    let w = (2.0 * ups as f64 - n as f64) * params.tau.sqrt();
    n as f64 * params.ln_retention() + params.sigma * w
}

/// Exact median of `S_n` from the binomial law of the up-step count.
pub fn median_price(params: &TreeParams, n: usize) -> Result<f64> {
    params.validate()?;
    params.check_step(n)?;
    let k = Binomial::new(n as u64, params.up_probability()).median();
    Ok(params.s0 * log_price_at(params, n, k).exp())
}

/// Exact `P(S_n < S₀)`.
pub fn loss_probability(params: &TreeParams, n: usize) -> Result<f64> {
    params.validate()?;
    params.check_step(n)?;
    let law = Binomial::new(n as u64, params.up_probability());
    Ok((0..=n as u64)
        .take_while(|&k| log_price_at(params, n, k) < 0.0)
        .map(|k| law.pmf(k))
        .sum())
}
