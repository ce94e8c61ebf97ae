#[path = "support/ols_oracle.rs"]
mod ols_oracle;
#[path = "support/random_ols.rs"]
mod random_ols;

use bubbletree::regress::{build_design, ols, run_spec, CrossSection, DesignMatrix, Spec, Variable};
use nalgebra::DMatrix;
use ols_oracle::normal_equations;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use random_ols::{random_problem, rel_close};

#[test]
fn matches_exact_normal_equations() {
    for seed in 0..40 {
        let p = random_problem(seed, 500);
        let fit = ols(&p.y, &p.design).unwrap();
        let oracle = normal_equations(&p.rows, &p.y, p.centered);
        assert_eq!(fit.centered, p.centered, "seed {seed}");
        for j in 0..p.truth.len() {
            assert!(rel_close(fit.estimate[j], oracle.estimate[j], 1e-8), "seed {seed} b{j}");
            assert!(rel_close(fit.std_error[j], oracle.std_error[j], 1e-8), "seed {seed} se{j}");
            assert!(rel_close(fit.t_statistic[j], oracle.t_statistic[j], 1e-6), "seed {seed} t{j}");
            assert!((fit.t_statistic[j] - fit.estimate[j] / fit.std_error[j]).abs() <= 1e-10 * fit.t_statistic[j].abs());
        }
        assert!(rel_close(fit.r_squared, oracle.r_squared, 1e-8), "seed {seed}");
        assert!(rel_close(fit.adj_r_squared, oracle.adj_r_squared, 1e-8), "seed {seed}");
        assert!(rel_close(fit.f_statistic, oracle.f_statistic, 1e-6), "seed {seed}");
        assert!((0.0..=1.0).contains(&fit.r_squared) && fit.adj_r_squared <= fit.r_squared);
    }
}

#[test]
fn estimates_cover_truth() {
    for seed in 100..140 {
        let p = random_problem(seed, 500);
        let fit = ols(&p.y, &p.design).unwrap();
        for j in 0..p.truth.len() {
            let z = (fit.estimate[j] - p.truth[j]) / fit.std_error[j];
            assert!(z.abs() < 4.0, "seed {seed} column {j}: z = {z}");
        }
    }
}

#[test]
fn residuals_are_orthogonal_to_columns() {
    for seed in 200..230 {
        let p = random_problem(seed, 500);
        let fit = ols(&p.y, &p.design).unwrap();
        let norm_y = p.y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for j in 0..p.design.columns.len() {
            let dot: f64 = (0..p.y.len()).map(|i| p.design.values[(i, j)] * fit.residuals[i]).sum();
            let col_norm = p.design.values.column(j).norm();
            assert!(dot.abs() <= 1e-8 * norm_y * col_norm.max(1.0), "seed {seed} column {j}: {dot}");
        }
    }
}

fn sector_cross_section(seed: u64, n: usize, n_sectors: usize) -> (CrossSection, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sector: Vec<String> = (0..n)
        .map(|i| format!("S{}", if i < n_sectors { i } else { rng.random_range(0..n_sectors) }))
        .collect();
    let market_cap: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(8.0..11.0))).collect();
    let effects: Vec<f64> = (0..n_sectors).map(|s| s as f64 * 0.3 - 0.5).collect();
    let y = (0..n)
        .map(|i| {
            let s: usize = sector[i][1..].parse().unwrap();
            let e: f64 = rng.sample(StandardNormal);
            effects[s] - 0.2 * market_cap[i].ln() + 0.5 * e
        })
        .collect();
    let cs = CrossSection {
        tickers: (0..n).map(|i| format!("T{i:04}")).collect(),
        market_cap,
        sector,
        book_value_per_share: vec![1.0; n],
        price: vec![Some(1.0); n],
    };
    (cs, y)
}

#[test]
fn intercept_is_subsumed_by_sector_block() {
    for seed in 0..10 {
        let (cs, y) = sector_cross_section(seed, 300, 10);
        let full = run_spec(&Spec::new("a", &[Variable::LnCap, Variable::Sectors], false), &cs, &y).unwrap().0;
        let reduced = run_spec(&Spec::new("b", &[Variable::LnCap, Variable::SectorsReduced], true), &cs, &y).unwrap().0;
        for (a, b) in full.fitted.iter().zip(&reduced.fitted) {
            assert!((a - b).abs() < 1e-8);
        }
        assert!((full.r_squared - reduced.r_squared).abs() < 1e-8);
        assert!((full.estimate[0] - reduced.estimate[1]).abs() < 1e-8);
        // sector coefficients shift by the reference level
        assert!((full.estimate[1] - reduced.estimate[0]).abs() < 1e-8);
        assert!((full.estimate[2] - full.estimate[1] - reduced.estimate[2]).abs() < 1e-8);
    }
}

#[test]
fn planted_sector_effects_are_recovered() {
    let (cs, y) = sector_cross_section(77, 2000, 10);
    let res = run_spec(&Spec::new("a", &[Variable::LnCap, Variable::Sectors], false), &cs, &y).unwrap().0;
    assert_eq!(res.variables.len(), 11);
    let truth: Vec<f64> = std::iter::once(-0.2).chain((0..10).map(|s| s as f64 * 0.3 - 0.5)).collect();
    for j in 0..11 {
        assert!(((res.estimate[j] - truth[j]) / res.std_error[j]).abs() < 4.0, "{}", res.variables[j]);
    }
}

#[test]
fn noise_column_never_lowers_r_squared() {
    for seed in 300..330 {
        let p = random_problem(seed, 200);
        if p.design.columns.len() == 12 {
            continue;
        }
        let base = ols(&p.y, &p.design).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let (n, k) = p.design.values.shape();
        let extra: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let mut columns = p.design.columns.clone();
        columns.push("noise".into());
        let bigger = DesignMatrix {
            rows: p.design.rows.clone(),
            columns,
            values: DMatrix::from_fn(n, k + 1, |i, j| if j < k { p.design.values[(i, j)] } else { extra[i] }),
        };
        let more = ols(&p.y, &bigger).unwrap();
        assert!(more.r_squared >= base.r_squared - 1e-12, "seed {seed}");
    }
}

#[test]
fn design_from_cross_section_matches_columns() {
    let (mut cs, _) = sector_cross_section(3, 20, 3);
    cs.book_value_per_share = (0..20).map(|i| 0.5 + i as f64).collect();
    cs.price = (0..20).map(|i| Some(10.0 + i as f64)).collect();
    let x = build_design(&cs, &[Variable::LnCap, Variable::PriceToBook, Variable::BookToPrice, Variable::LnPriceToBook], true).unwrap();
    assert_eq!(x.columns, ["(Intercept)", "ln(C)", "P/B", "B/P", "ln(P/B)"]);
    for i in 0..20 {
        let p = 10.0 + i as f64;
        let b = 0.5 + i as f64;
        assert_eq!(x.values[(i, 0)], 1.0);
        assert_eq!(x.values[(i, 1)], cs.market_cap[i].ln());
        assert_eq!(x.values[(i, 2)], p / b);
        assert_eq!(x.values[(i, 3)], b / p);
        assert_eq!(x.values[(i, 4)], (p / b).ln());
    }
}
