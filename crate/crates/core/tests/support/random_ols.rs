//! Random regression problems with known coefficients.

use bubbletree::regress::{DesignMatrix, INTERCEPT};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub struct Problem {
    pub design: DesignMatrix,
    pub rows: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub truth: Vec<f64>,
    /// A constant lies in the column span.
    pub centered: bool,
}

pub const NOISE: f64 = 0.1;

/// `n` rows, at most 12 columns, sometimes with a sector block.
pub fn random_problem(seed: u64, n: usize) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_sectors = [0, 0, 2, 3, 4, 5][rng.random_range(0..6)];
    let reduced = n_sectors > 0 && rng.random_bool(0.5);
    let intercept = if n_sectors == 0 { rng.random_bool(0.7) } else { reduced };
    let sector_cols = if reduced { n_sectors - 1 } else { n_sectors };
    let room = 12 - sector_cols - usize::from(intercept);
    let n_cont = rng.random_range(1..=room.min(6));

    let sector_of: Vec<usize> = (0..n)
        .map(|i| if i < n_sectors { i } else if n_sectors > 0 { rng.random_range(0..n_sectors) } else { 0 })
        .collect();
    let scales: Vec<(f64, f64)> = (0..n_cont)
        .map(|_| (10f64.powf(rng.random_range(-1.0..2.0)), rng.random_range(-3.0..3.0)))
        .collect();

    let mut columns = Vec::new();
    if intercept {
        columns.push(INTERCEPT.to_owned());
    }
    for j in 0..n_cont {
        columns.push(format!("x{j}"));
    }
    let first_sector = usize::from(reduced);
    for s in first_sector..n_sectors {
        columns.push(format!("sector{s}"));
    }
    let k = columns.len();
    let truth: Vec<f64> = (0..k)
        .map(|_| {
            let m: f64 = rng.random_range(0.5..2.0);
            if rng.random_bool(0.5) { m } else { -m }
        })
        .collect();

    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for &sector in sector_of.iter() {
        let mut row = Vec::with_capacity(k);
        if intercept {
            row.push(1.0);
        }
        for &(scale, offset) in &scales {
            let z: f64 = rng.sample(StandardNormal);
            row.push(scale * (offset + z));
        }
        for s in first_sector..n_sectors {
            row.push(f64::from(s == sector));
        }
        let e: f64 = rng.sample(StandardNormal);
        y.push(row.iter().zip(&truth).map(|(x, b)| x * b).sum::<f64>() + NOISE * e);
        rows.push(row);
    }
    let design = DesignMatrix {
        rows: (0..n).map(|i| format!("T{i:04}")).collect(),
        columns,
        values: DMatrix::from_fn(n, k, |i, j| rows[i][j]),
    };
    Problem {
        design,
        rows,
        y,
        truth,
        centered: intercept || n_sectors > 0,
    }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(f64::MIN_POSITIVE)
}
