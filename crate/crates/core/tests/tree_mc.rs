use bubbletree::stats::Binomial;
use bubbletree::tree::{
    dividends_expected, dividends_most_probable, drift_lower_bound, drift_nu, effective_drift,
    expected_price, loss_probability, mc_ensemble, mc_sample, median_price, most_probable_path,
    simulate_walk_stream, walk_drift_for, walk_mean_variance, PricePath, TreeParams,
};

const DAY: f64 = 1.0 / 252.0;

fn martingale(sigma: f64, tau: f64, n: usize) -> TreeParams {
    TreeParams::with_target_drift(sigma, 0.0, tau, n, 100.0).unwrap()
}

#[test]
fn walk_moments_match_ensemble() {
    for (mu, tau, n) in [(0.0, DAY, 252usize), (0.5, 1.0 / 52.0, 104), (-1.5, 0.01, 300)] {
        let p = TreeParams::new(1.0, mu, tau, n, 1.0).unwrap();
        let paths = 100_000;
        let s = mc_sample(&p, paths, 11, &[n]).unwrap().checkpoint_stats(0);
        let (m, v) = walk_mean_variance(&p, n).unwrap();
        let se_mean = (v / paths as f64).sqrt();
        let se_var = v * (2.0 / (paths - 1) as f64).sqrt();
        assert!((s.walk_mean - m).abs() < 4.0 * se_mean, "mu={mu}: {} vs {m}", s.walk_mean);
        assert!((s.walk_variance - v).abs() < 4.0 * se_var, "mu={mu}: {} vs {v}", s.walk_variance);
    }
}

#[test]
fn reconstruction_is_exact_on_every_path() {
    let p = TreeParams::new(0.4, 0.3, DAY, 500, 50.0).unwrap().with_dividend(0.002).unwrap();
    for stream in 0..50 {
        let w = simulate_walk_stream(&p, 3, stream).unwrap();
        assert_eq!(w.values[0], 0.0);
        for pair in w.values.windows(2) {
            assert!(((pair[1] - pair[0]).abs() - DAY.sqrt()).abs() < 1e-12);
        }
        let path = PricePath::from_walk(&p, &w);
        for (n, s) in path.prices.iter().enumerate() {
            let ratio = s / (1.0 - p.dividend).powi(n as i32) / p.s0;
            let want = (p.sigma * w.values[n]).exp();
            assert!((ratio / want - 1.0).abs() < 1e-12);
        }
        assert_eq!(path.dividends_cum[0], 0.0);
        assert!(path.dividends_cum.windows(2).all(|d| d[1] >= d[0]));
    }
}

#[test]
fn martingale_mean_holds_at_checkpoints() {
    let n = 1008;
    let p = martingale(0.2, DAY, n);
    assert!(p.nu().abs() < 1e-14);
    let sample = mc_sample(&p, 100_000, 21, &[n / 4, n / 2, n]).unwrap();
    for s in sample.all_stats() {
        assert!((s.price_mean - 100.0).abs() < 4.0 * s.price_stderr, "step {}: {:?}", s.step, s);
    }
}

#[test]
fn martingale_loses_more_often_as_horizon_grows() {
    let mut last = 0.5;
    for n in [64usize, 256, 1024] {
        let p = martingale(0.5, 1.0 / 52.0, n);
        let exact = loss_probability(&p, n).unwrap();
        assert!(exact > last, "n={n}: {exact}");
        last = exact;
    }
}

#[test]
fn drift_matches_log_expectation() {
    let (sigma, mu, tau, n) = (0.3, 0.1, DAY, 252usize);
    let p = TreeParams::new(sigma, mu, tau, n, 1.0).unwrap();
    let stats = mc_ensemble(&p, 200_000, 8).unwrap();
    let t = n as f64 * tau;
    let est = stats.terminal_mean.ln() / t;
    let se = stats.stderr_mean / stats.terminal_mean / t;
    let nu = drift_nu(sigma, mu, tau).unwrap();
    assert!((est - nu).abs() < 3.0 * se, "{est} vs {nu} (se {se})");
    assert!((expected_price(&p, n).unwrap() - (nu * t).exp()).abs() < 1e-12 * (nu * t).exp());
}

#[test]
fn effective_drift_identity_on_grid() {
    for i in 0..10 {
        let sigma = 0.05 + 0.2 * i as f64;
        for k in 0..5 {
            let tau = [1e-4, 1e-3, DAY, 0.05, 0.5][k];
            for j in 0..10 {
                let mu = (j as f64 / 4.5 - 1.0) * 0.95 / tau.sqrt();
                let lhs = effective_drift(sigma, mu, tau).unwrap();
                let rhs = drift_nu(sigma, mu, tau).unwrap() - drift_lower_bound(sigma, tau).unwrap();
                let scale = drift_nu(sigma, mu, tau).unwrap().abs().max(drift_lower_bound(sigma, tau).unwrap());
                assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1.0), "{sigma} {mu} {tau}");
            }
        }
    }
}

#[test]
fn walk_drift_inversion_round_trips() {
    for &(sigma, nu, tau) in &[(0.2, 0.0, DAY), (0.5, 0.1, 0.01), (1.0, -0.3, 0.1), (0.3, 0.04, 1e-6)] {
        let mu = walk_drift_for(sigma, nu, tau).unwrap();
        assert!((drift_nu(sigma, mu, tau).unwrap() - nu).abs() < 1e-12);
    }
}

#[test]
fn expected_dividends_match_ensemble() {
    let p = TreeParams::new(0.3, 0.4, 0.01, 400, 100.0).unwrap().with_dividend(0.002).unwrap();
    let sample = mc_sample(&p, 200_000, 99, &[100, 400]).unwrap();
    for s in sample.all_stats() {
        let want = dividends_expected(&p, s.step).unwrap();
        assert!((s.dividends_mean - want).abs() < 3.0 * s.dividends_stderr, "{s:?} vs {want}");
    }
}

#[test]
fn expected_dividends_dominate_most_probable() {
    for sigma in [0.05, 0.2, 0.6] {
        for mu in [-2.0, 0.0, 1.5] {
            for d in [1e-4, 1e-3, 1e-2] {
                let p = TreeParams::new(sigma, mu, 0.01, 2000, 1.0).unwrap().with_dividend(d).unwrap();
                for n in [1, 10, 500, 2000] {
                    let e = dividends_expected(&p, n).unwrap();
                    let m = dividends_most_probable(&p, n).unwrap();
                    assert!(e >= m * (1.0 - 1e-14), "{sigma} {mu} {d} {n}");
                }
            }
        }
    }
    // vanishing σ: both series coincide
    let p = TreeParams::new(1e-8, 0.5, 0.01, 500, 1.0).unwrap().with_dividend(0.01).unwrap();
    let (e, m) = (dividends_expected(&p, 500).unwrap(), dividends_most_probable(&p, 500).unwrap());
    assert!((e / m - 1.0).abs() < 1e-6);
}

#[test]
fn driftless_median_is_the_binomial_median() {
    let n = 500;
    let p = TreeParams::new(0.3, 0.0, DAY, n, 100.0).unwrap().with_dividend(1e-4).unwrap();
    let stats = mc_ensemble(&p, 100_001, 4).unwrap();
    let want = median_price(&p, n).unwrap();
    assert_eq!(Binomial::new(n as u64, 0.5).median(), 250);
    assert!((want - 100.0 * (1.0 - 1e-4f64).powi(n as i32)).abs() < 1e-10);
    assert!((stats.terminal_median / want - 1.0).abs() < 1e-12);
}

#[test]
fn most_probable_path_falls_under_martingale() {
    let p = martingale(0.2, DAY, 2520);
    assert!(p.mu < 0.0);
    let path: Vec<f64> = (0..=2520).step_by(252).map(|n| most_probable_path(&p, n).unwrap()).collect();
    assert!(path.windows(2).all(|w| w[1] < w[0]));
}
