//! Sample statistics and the exact binomial law of the tree's up-step count.

/// Arithmetic mean; `NaN` on empty input.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with the `n - 1` denominator (two-pass).
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Linear interpolation between order statistics (R type 7 / numpy "linear").
/// `sorted` must be ascending and nonempty.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&q));
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted_copy(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Exact distribution of the number of up-steps in `n` Bernoulli(`p`) trials,
/// evaluated in log space so that `n` in the tens of thousands is safe.
#[derive(Clone, Debug)]
pub struct Binomial {
    n: u64,
    p: f64,
}

impl Binomial {
    pub fn new(n: u64, p: f64) -> Self {
        Self { n, p }
    }

    pub fn ln_pmf(&self, k: u64) -> f64 {
        if k > self.n {
            return f64::NEG_INFINITY;
        }
        let (p, q) = (self.p, 1.0 - self.p);
        let term = |count: u64, prob: f64| {
            if count == 0 {
                0.0
            } else if prob == 0.0 {
                f64::NEG_INFINITY
            } else {
                count as f64 * prob.ln()
            }
        };
        ln_choose(self.n, k) + term(k, p) + term(self.n - k, q)
    }

    pub fn pmf(&self, k: u64) -> f64 {
        self.ln_pmf(k).exp()
    }

    /// P(K <= k).
    pub fn cdf(&self, k: u64) -> f64 {
        if k >= self.n {
            return 1.0;
        }
        (0..=k).map(|j| self.pmf(j)).sum::<f64>().min(1.0)
    }

    /// P(K < k).
    pub fn cdf_strict(&self, k: u64) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.cdf(k - 1)
        }
    }

    /// Smallest `k` with P(K <= k) >= 1/2.
    pub fn median(&self) -> u64 {
        let mut acc = 0.0;
        for k in 0..=self.n {
            acc += self.pmf(k);
            if acc >= 0.5 {
                return k;
            }
        }
        self.n
    }
}

fn ln_choose(n: u64, k: u64) -> f64 {
    use libm::lgamma;
    lgamma(n as f64 + 1.0) - lgamma(k as f64 + 1.0) - lgamma((n - k) as f64 + 1.0)
}
