use serde::{Deserialize, Serialize};

use super::TermStatsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

const GAMMA_EPS: f64 = 1e-16;
const GAMMA_MAX_ITER: usize = 10_000;

fn lower_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * GAMMA_EPS {
            break;
        }
    }
    (sum.ln() - x + a * x.ln() - ln_gamma(a)).exp()
}

/// Modified Lentz evaluation of the continued fraction for `Q(a, x)`.
fn upper_fraction(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        (1.0 - lower_series(a, x)).clamp(0.0, 1.0)
    } else {
        upper_fraction(a, x).clamp(0.0, 1.0)
    }
}

/// Survival function of the χ² distribution; `dof = 0` is a point mass at 0.
pub fn chi2_sf(statistic: f64, dof: usize) -> f64 {
    if dof == 0 {
        return if statistic > 0.0 { 0.0 } else { 1.0 };
    }
    gamma_q(dof as f64 / 2.0, statistic / 2.0)
}

/// Pearson χ² test of independence on an `r x c` table of counts.
pub fn chi_square(observed: &[Vec<u64>]) -> Result<ChiSquare, TermStatsError> {
    let r = observed.len();
    let c = observed.first().map_or(0, Vec::len);
    if r == 0 || c == 0 {
        return Err(TermStatsError::EmptyTable);
    }
    if observed.iter().any(|row| row.len() != c) {
        return Err(TermStatsError::RaggedTable);
    }
    let rows: Vec<f64> = observed.iter().map(|row| row.iter().sum::<u64>() as f64).collect();
    let cols: Vec<f64> = (0..c).map(|j| observed.iter().map(|row| row[j]).sum::<u64>() as f64).collect();
    if let Some(i) = rows.iter().position(|&s| s == 0.0) {
        return Err(TermStatsError::DegenerateMargin(format!("row {i} is all zero")));
    }
    if let Some(j) = cols.iter().position(|&s| s == 0.0) {
        return Err(TermStatsError::DegenerateMargin(format!("column {j} is all zero")));
    }
    let n: f64 = rows.iter().sum();
    let mut statistic = 0.0;
    for (i, row) in observed.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            let e = rows[i] * cols[j] / n;
            let diff = o as f64 - e;
            statistic += diff * diff / e;
        }
    }
    let dof = (r - 1) * (c - 1);
    Ok(ChiSquare { statistic, dof, p_value: chi2_sf(statistic, dof) })
}

/// 2x2 test that treats a zero margin as no evidence (χ² = 0, p = 1).
pub fn chi_square_2x2(a: u64, b: u64, c: u64, d: u64) -> ChiSquare {
    chi_square(&[vec![a, b], vec![c, d]]).unwrap_or(ChiSquare { statistic: 0.0, dof: 1, p_value: 1.0 })
}
