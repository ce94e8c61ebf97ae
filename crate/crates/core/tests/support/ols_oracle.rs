//! Least squares by the normal equations in exact rational arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

#[derive(Debug, Clone)]
pub struct OracleFit {
    pub estimate: Vec<f64>,
    pub std_error: Vec<f64>,
    pub t_statistic: Vec<f64>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub f_statistic: f64,
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite input")
}

fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().expect("representable")
}

/// `rows[i]` is row `i` of the design. `centered` selects mean-adjusted R²/F.
pub fn normal_equations(rows: &[Vec<f64>], y: &[f64], centered: bool) -> OracleFit {
    let n = rows.len();
    let k = rows[0].len();
    let xq: Vec<Vec<BigRational>> = rows.iter().map(|r| r.iter().map(|&v| exact(v)).collect()).collect();
    let yq: Vec<BigRational> = y.iter().map(|&v| exact(v)).collect();

    // augmented [XᵀX | I | Xᵀy]
    let width = 2 * k + 1;
    let mut m = vec![vec![BigRational::zero(); width]; k];
    for a in 0..k {
        for b in 0..k {
            let mut s = BigRational::zero();
            for i in 0..n {
                s += &xq[i][a] * &xq[i][b];
            }
            m[a][b] = s;
        }
        m[a][k + a] = BigRational::from_integer(BigInt::from(1));
        let mut s = BigRational::zero();
        for i in 0..n {
            s += &xq[i][a] * &yq[i];
        }
        m[a][2 * k] = s;
    }
    for col in 0..k {
        let pivot = (col..k).find(|&r| !m[r][col].is_zero()).expect("singular normal equations");
        m.swap(col, pivot);
        let inv = m[col][col].recip();
        for c in 0..width {
            m[col][c] = &m[col][c] * &inv;
        }
        for r in 0..k {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in 0..width {
                    let d = &f * &m[col][c];
                    m[r][c] -= d;
                }
            }
        }
    }
    let beta: Vec<BigRational> = (0..k).map(|a| m[a][2 * k].clone()).collect();

    let mut sse = BigRational::zero();
    let mut sum_y = BigRational::zero();
    let mut sum_y2 = BigRational::zero();
    for i in 0..n {
        let mut fit = BigRational::zero();
        for a in 0..k {
            fit += &xq[i][a] * &beta[a];
        }
        let e = &yq[i] - fit;
        sse += &e * &e;
        sum_y += &yq[i];
        sum_y2 += &yq[i] * &yq[i];
    }
    let n_q = BigRational::from_integer(BigInt::from(n));
    let tss = if centered {
        &sum_y2 - &sum_y * &sum_y / &n_q
    } else {
        sum_y2
    };
    let df_resid = n - k;
    let s2 = &sse / BigRational::from_integer(BigInt::from(df_resid));
    let estimate: Vec<f64> = beta.iter().map(to_f64).collect();
    let std_error: Vec<f64> = (0..k).map(|a| to_f64(&(&s2 * &m[a][k + a])).sqrt()).collect();
    let t_statistic = estimate.iter().zip(&std_error).map(|(b, s)| b / s).collect();
    let r2 = BigRational::from_integer(BigInt::from(1)) - &sse / &tss;
    let r_squared = to_f64(&r2);
    let lead = usize::from(centered);
    let df_model = k - lead;
    let adj_r_squared = 1.0 - (1.0 - r_squared) * (n - lead) as f64 / df_resid as f64;
    let f_statistic = to_f64(
        &((&tss - &sse) / BigRational::from_integer(BigInt::from(df_model)) / &s2),
    );
    OracleFit {
        estimate,
        std_error,
        t_statistic,
        r_squared,
        adj_r_squared,
        f_statistic,
    }
}
