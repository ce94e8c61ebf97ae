//! Seeded Monte Carlo ensembles over the tree.
//!
//! Path `i` draws from stream `i` of the base seed (see [`crate::rng`]).
//! Paths are generated in fixed-size chunks on the rayon pool and gathered
//! back in path order before any reduction, so every statistic is bitwise
//! identical for any worker count.

use rayon::prelude::*;

use super::TreeParams;
use crate::error::{Error, Result};
use crate::rng::{Bernoulli, PathRng};
use crate::stats::{mean, quantile_sorted, sample_variance, sorted_copy};

const CHUNK: usize = 1024;

/// Per-path observations of `W_n`, `S_n` and `D_n` at a set of checkpoint steps.
#[derive(Clone, Debug)]
pub struct EnsembleSample {
    pub params: TreeParams,
    pub base_seed: u64,
    pub checkpoints: Vec<usize>,
    /// `walks[c][i]` is `W` of path `i` at checkpoint `c`; same layout below.
    pub walks: Vec<Vec<f64>>,
    pub prices: Vec<Vec<f64>>,
    pub dividends: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointStats {
    pub step: usize,
    pub walk_mean: f64,
    pub walk_variance: f64,
    pub price_mean: f64,
    pub price_stderr: f64,
    pub price_median: f64,
    pub dividends_mean: f64,
    pub dividends_stderr: f64,
    pub loss_probability: f64,
}

/// Terminal-price summary of an ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleStats {
    pub n_paths: usize,
    pub terminal_mean: f64,
    pub terminal_median: f64,
    /// 1%, 25%, 75% and 99% quantiles of `S_N`.
    pub terminal_quantiles: [f64; 4],
    /// Fraction of paths with `S_N < S₀`.
    pub loss_probability: f64,
    pub stderr_mean: f64,
    pub dividends_mean: f64,
    pub dividends_stderr: f64,
}

pub const QUANTILE_LEVELS: [f64; 4] = [0.01, 0.25, 0.75, 0.99];

fn stderr(xs: &[f64]) -> f64 {
    (sample_variance(xs) / xs.len() as f64).sqrt()
}

impl EnsembleSample {
    pub fn n_paths(&self) -> usize {
        self.prices.first().map_or(0, Vec::len)
    }

    pub fn checkpoint_stats(&self, c: usize) -> CheckpointStats {
        let prices = &self.prices[c];
        let dividends = &self.dividends[c];
        let sorted = sorted_copy(prices);
        CheckpointStats {
            step: self.checkpoints[c],
            walk_mean: mean(&self.walks[c]),
            walk_variance: sample_variance(&self.walks[c]),
            price_mean: mean(prices),
            price_stderr: stderr(prices),
            price_median: quantile_sorted(&sorted, 0.5),
            dividends_mean: mean(dividends),
            dividends_stderr: stderr(dividends),
            loss_probability: prices.iter().filter(|&&s| s < self.params.s0).count() as f64
                / prices.len() as f64,
        }
    }

    pub fn all_stats(&self) -> Vec<CheckpointStats> {
        (0..self.checkpoints.len())
            .map(|c| self.checkpoint_stats(c))
            .collect()
    }
}

/// Simulates `n_paths` paths and records them at each checkpoint step.
pub fn mc_sample(
    params: &TreeParams,
    n_paths: usize,
    base_seed: u64,
    checkpoints: &[usize],
) -> Result<EnsembleSample> {
    params.validate()?;
    if n_paths == 0 {
        return Err(Error::param("n_paths", "must be at least 1"));
    }
    if checkpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("checkpoints", "must be strictly increasing"));
    }
    for &c in checkpoints {
        params.check_step(c)?;
    }

    let kernel = PathKernel::new(params);
    let n_chunks = n_paths.div_ceil(CHUNK);
    let width = checkpoints.len();
    let chunks: Vec<Vec<[f64; 3]>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * CHUNK;
            let end = (start + CHUNK).min(n_paths);
            let mut rows = Vec::with_capacity((end - start) * width);
            for path in start..end {
                kernel.run(base_seed, path as u64, checkpoints, &mut rows);
            }
            rows
        })
        .collect();

    let mut walks = vec![Vec::with_capacity(n_paths); width];
    let mut prices = vec![Vec::with_capacity(n_paths); width];
    let mut dividends = vec![Vec::with_capacity(n_paths); width];
    for rows in &chunks {
        for path_rows in rows.chunks(width.max(1)) {
            for (c, [w, s, d]) in path_rows.iter().enumerate() {
                walks[c].push(*w);
                prices[c].push(*s);
                dividends[c].push(*d);
            }
        }
    }
    Ok(EnsembleSample {
        params: *params,
        base_seed,
        checkpoints: checkpoints.to_vec(),
        walks,
        prices,
        dividends,
    })
}

/// Terminal statistics of `n_paths` paths.
pub fn mc_ensemble(params: &TreeParams, n_paths: usize, base_seed: u64) -> Result<EnsembleStats> {
    let sample = mc_sample(params, n_paths, base_seed, &[params.n_steps])?;
    let prices = &sample.prices[0];
    let sorted = sorted_copy(prices);
    let cp = sample.checkpoint_stats(0);
    Ok(EnsembleStats {
        n_paths,
        terminal_mean: cp.price_mean,
        terminal_median: cp.price_median,
        terminal_quantiles: QUANTILE_LEVELS.map(|q| quantile_sorted(&sorted, q)),
        loss_probability: cp.loss_probability,
        stderr_mean: cp.price_stderr,
        dividends_mean: cp.dividends_mean,
        dividends_stderr: cp.dividends_stderr,
    })
}

/// Lookup tables shared by every path of one ensemble.
struct PathKernel {
    n_steps: usize,
    coin: Bernoulli,
    step: f64,
    /// `exp(σ√τ k)` for `k = -N..=N`, indexed by `k + N`.
    growth: Vec<f64>,
    /// `S₀ (1-d)^m` for `m = 0..=N`.
    retained: Vec<f64>,
    /// `d S₀ (1-d)^{m-1}` for `m = 1..=N` (index 0 unused).
    payout: Vec<f64>,
    pays_dividends: bool,
}

impl PathKernel {
    fn new(params: &TreeParams) -> Self {
        let n = params.n_steps;
        let step = params.tau.sqrt();
        let a = params.sigma * step;
        let growth = (0..=2 * n)
            .map(|i| (a * (i as f64 - n as f64)).exp())
            .collect();
        let ln_ret = params.ln_retention();
        let retained = (0..=n)
            .map(|m| (params.s0.ln() + m as f64 * ln_ret).exp())
            .collect();
        let pays_dividends = params.dividend > 0.0;
        let payout = (0..=n)
            .map(|m| {
                if m == 0 || !pays_dividends {
                    0.0
                } else {
                    (params.dividend.ln() + params.s0.ln() + (m - 1) as f64 * ln_ret).exp()
                }
            })
            .collect();
        Self {
            n_steps: n,
            coin: Bernoulli::new(params.up_probability()),
            step,
            growth,
            retained,
            payout,
            pays_dividends,
        }
    }

    fn run(&self, seed: u64, stream: u64, checkpoints: &[usize], out: &mut Vec<[f64; 3]>) {
        let mut rng = PathRng::new(seed, stream);
        let n = self.n_steps;
        let mut k: i64 = 0;
        let mut cash = 0.0;
        let mut next = checkpoints.iter().peekable();
        let record = |m: usize, k: i64, cash: f64, out: &mut Vec<[f64; 3]>| {
            let idx = (k + n as i64) as usize;
            out.push([k as f64 * self.step, self.retained[m] * self.growth[idx], cash]);
        };
        if next.peek() == Some(&&0) {
            record(0, 0, 0.0, out);
            next.next();
        }
        let last = checkpoints.last().copied().unwrap_or(0);
        for m in 1..=last {
            k += if self.coin.sample(&mut rng) { 1 } else { -1 };
            if self.pays_dividends {
                cash += self.payout[m] * self.growth[(k + n as i64) as usize];
            }
            if next.peek() == Some(&&m) {
                record(m, k, cash, out);
                next.next();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{simulate_walk, simulate_walk_stream, PricePath};

    fn params() -> TreeParams {
        TreeParams::new(0.3, 0.2, 1.0 / 52.0, 104, 20.0)
            .unwrap()
            .with_dividend(0.001)
            .unwrap()
    }

    #[test]
    fn sample_matches_explicit_paths() {
        let p = params();
        let sample = mc_sample(&p, 3000, 42, &[0, 10, 104]).unwrap();
        for i in [0usize, 1, 1023, 1024, 2999] {
            let walk = simulate_walk_stream(&p, 42, i as u64).unwrap();
            let path = PricePath::from_walk(&p, &walk);
            for (c, &m) in [0usize, 10, 104].iter().enumerate() {
                assert!((sample.walks[c][i] - walk.values[m]).abs() < 1e-12);
                let s = path.prices[m];
                assert!((sample.prices[c][i] - s).abs() <= 1e-12 * s);
                let d = path.dividends_cum[m];
                assert!((sample.dividends[c][i] - d).abs() <= 1e-12 * d.max(1.0));
            }
        }
    }

    #[test]
    fn single_path_ensemble_is_that_path() {
        let p = params();
        let stats = mc_ensemble(&p, 1, 9).unwrap();
        let walk = simulate_walk(&p, 9).unwrap();
        let path = PricePath::from_walk(&p, &walk);
        let s = *path.prices.last().unwrap();
        assert!((stats.terminal_mean - s).abs() <= 1e-12 * s);
        assert_eq!(stats.terminal_mean, stats.terminal_median);
        assert!(stats.terminal_quantiles.iter().all(|&q| q == stats.terminal_mean));
        assert_eq!(stats.stderr_mean, 0.0);
        assert_eq!(stats.loss_probability, if s < p.s0 { 1.0 } else { 0.0 });
    }

    #[test]
    fn quantiles_are_ordered() {
        let stats = mc_ensemble(&params(), 5000, 1).unwrap();
        let q = stats.terminal_quantiles;
        assert!(q.windows(2).all(|w| w[0] <= w[1]));
        assert!(q[1] <= stats.terminal_median && stats.terminal_median <= q[2]);
        assert!((0.0..=1.0).contains(&stats.loss_probability));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let p = params();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| mc_sample(&p, 5000, 77, &[50, 104]).unwrap())
        };
        let one = run(1);
        let four = run(4);
        assert_eq!(one.prices, four.prices);
        assert_eq!(one.dividends, four.dividends);
        assert_eq!(one.all_stats(), four.all_stats());
    }

    #[test]
    fn rejects_bad_arguments() {
        let p = params();
        assert!(mc_sample(&p, 0, 1, &[1]).is_err());
        assert!(mc_sample(&p, 1, 1, &[5, 5]).is_err());
        assert!(mc_sample(&p, 1, 1, &[105]).is_err());
    }
}
