//! `simulate`: ensemble statistics next to the closed forms.

use std::path::{Path, PathBuf};

use bubbletree::stats::{quantile_sorted, sorted_copy};
use bubbletree::tree::{
    dividends_expected, dividends_most_probable, drift_lower_bound, expected_price, loss_probability,
    mc_sample, median_price, most_probable_path, simulate_walk_stream, PricePath, TreeParams,
};

use crate::config::{key, Key, Settings};
use crate::output::{num, opt, Outputs, Table};
use crate::CliError;

pub const KEYS: &[Key] = &[
    key("seed", "1", "base seed; path i uses stream i"),
    key("sigma", "0.2", "volatility per unit time"),
    key("mu", "", "walk drift; empty derives it from nu"),
    key("nu", "0", "price drift ln E(S_T/S_0)/T, used when mu is empty"),
    key("tau", "1/252", "time step"),
    key("n_steps", "252", "number of steps N"),
    key("s0", "100", "initial price"),
    key("dividend", "0", "dividend fraction d paid each step"),
    key("paths", "10000", "ensemble size"),
    key("sample_paths", "10", "paths written to paths.csv (at most 1000)"),
    key("checkpoints", "", "comma-separated steps; empty means N/4, N/2, 3N/4, N"),
];

const MAX_SAMPLE_PATHS: usize = 1000;

fn params(s: &Settings) -> Result<TreeParams, CliError> {
    let (sigma, tau, n, s0) = (s.f64("sigma")?, s.f64("tau")?, s.usize("n_steps")?, s.f64("s0")?);
    let p = match s.opt_f64("mu")? {
        Some(mu) => TreeParams::new(sigma, mu, tau, n, s0)?,
        None => TreeParams::with_target_drift(sigma, s.f64("nu")?, tau, n, s0)?,
    };
    Ok(p.with_dividend(s.f64("dividend")?)?)
}

fn checkpoints(s: &Settings, n: usize) -> Result<Vec<usize>, CliError> {
    let list = s.list("checkpoints");
    let mut steps: Vec<usize> = if list.is_empty() {
        [n / 4, n / 2, 3 * n / 4, n].into_iter().filter(|&c| c > 0).collect()
    } else {
        list.iter()
            .map(|c| {
                c.parse().map_err(|_| CliError::Config {
                    key: "checkpoints".into(),
                    value: s.raw("checkpoints").into(),
                    reason: format!("`{c}` is not a step number"),
                })
            })
            .collect::<Result<_, _>>()?
    };
    steps.sort_unstable();
    steps.dedup();
    Ok(steps)
}

pub fn run(s: &Settings, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let p = params(s)?;
    let seed: u64 = s.parsed("seed")?;
    let paths = s.usize("paths")?;
    let steps = checkpoints(s, p.n_steps)?;
    let sample = mc_sample(&p, paths, seed, &steps)?;
    let mut out = Outputs::new(out_dir);

    let n_sample = s.usize("sample_paths")?.min(MAX_SAMPLE_PATHS).min(paths);
    let mut path_table = Table::new(&["path", "step", "walk", "price", "dividends"]);
    for stream in 0..n_sample as u64 {
        let w = simulate_walk_stream(&p, seed, stream)?;
        let pp = PricePath::from_walk(&p, &w);
        for (n, ((x, price), d)) in w.values.iter().zip(&pp.prices).zip(&pp.dividends_cum).enumerate() {
            path_table.push(vec![stream.to_string(), n.to_string(), num(*x), num(*price), num(*d)]);
        }
    }
    out.add("paths.csv", path_table.csv());

    let mut stats = Table::new(&[
        "step", "paths", "walk_mean", "walk_variance", "price_mean", "price_stderr", "price_median",
        "q01", "q25", "q75", "q99", "loss_probability", "dividends_mean", "dividends_stderr",
    ]);
    let mut closed = Table::new(&["step", "quantity", "closed_form", "monte_carlo", "mc_stderr"]);
    for (c, st) in sample.all_stats().into_iter().enumerate() {
        let sorted = sorted_copy(&sample.prices[c]);
        let q = |l: f64| num(quantile_sorted(&sorted, l));
        stats.push(vec![
            st.step.to_string(),
            paths.to_string(),
            num(st.walk_mean),
            num(st.walk_variance),
            num(st.price_mean),
            num(st.price_stderr),
            num(st.price_median),
            q(0.01),
            q(0.25),
            q(0.75),
            q(0.99),
            num(st.loss_probability),
            num(st.dividends_mean),
            num(st.dividends_stderr),
        ]);
        let n = st.step;
        let loss = loss_probability(&p, n)?;
        let rows: [(&str, f64, Option<f64>, Option<f64>); 6] = [
            ("expected_price", expected_price(&p, n)?, Some(st.price_mean), Some(st.price_stderr)),
            ("median_price", median_price(&p, n)?, Some(st.price_median), None),
            ("most_probable_price", most_probable_path(&p, n)?, None, None),
            (
                "loss_probability",
                loss,
                Some(st.loss_probability),
                Some((loss * (1.0 - loss) / paths as f64).sqrt()),
            ),
            ("dividends_most_probable", dividends_most_probable(&p, n)?, None, None),
            ("dividends_expected", dividends_expected(&p, n)?, Some(st.dividends_mean), Some(st.dividends_stderr)),
        ];
        for (name, cf, mc, se) in rows {
            closed.push(vec![n.to_string(), name.into(), num(cf), opt(mc), opt(se)]);
        }
    }
    out.add("ensemble_stats.csv", stats.csv());
    out.add("closed_forms.csv", closed.csv());

    let derived = [
        ("mu", num(p.mu)),
        ("nu", num(p.nu())),
        ("nu_lower_bound", num(drift_lower_bound(p.sigma, p.tau)?)),
        ("up_probability", num(p.up_probability())),
        ("horizon", num(p.horizon())),
        ("checkpoints", steps.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")),
    ];
    let mut text = String::from("Tree parameters\n");
    for (k, v) in &derived {
        text.push_str(&format!("  {k} = {v}\n"));
    }
    text.push_str("\nEnsemble\n");
    text.push_str(&stats.text());
    text.push_str("\nClosed forms against Monte Carlo\n");
    text.push_str(&closed.text());
    out.add("simulate_report.txt", text);
    out.add("manifest.txt", s.manifest(&derived));
    out.write()
}
