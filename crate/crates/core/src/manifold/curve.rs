use serde::{Deserialize, Serialize};

use super::ManifoldError;

pub const CURVE_GRID_POINTS: usize = 300;
const MAX_ITERATIONS: usize = 500;
/// Mean squared error above which a fit is reported as failed.
const MAX_RESIDUAL: f64 = 1e-2;

/// Parameters of the low-dimensional similarity curve `1 / (1 + a d^(2b))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveFit {
    pub a: f64,
    pub b: f64,
    /// Mean squared error against the target envelope on the fit grid.
    pub residual: f64,
}

impl CurveFit {
    pub fn eval(&self, d: f64) -> f64 {
        1.0 / (1.0 + self.a * d.powf(2.0 * self.b))
    }
}

pub(crate) fn target(d: f64, min_dist: f64, spread: f64) -> f64 {
    if d <= min_dist {
        1.0
    } else {
        (-(d - min_dist) / spread).exp()
    }
}

fn grid(spread: f64) -> Vec<f64> {
    let hi = 3.0 * spread;
    (0..CURVE_GRID_POINTS)
        .map(|i| hi * i as f64 / (CURVE_GRID_POINTS - 1) as f64)
        .collect()
}

fn mse(xs: &[f64], ys: &[f64], a: f64, b: f64) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = 1.0 / (1.0 + a * x.powf(2.0 * b)) - y;
            r * r
        })
        .sum::<f64>()
        / xs.len() as f64
}

/// Least-squares fit of `1 / (1 + a d^(2b))` to the `min_dist`/`spread`
/// envelope over `d` in `[0, 3 spread]`, by Levenberg-Marquardt on
/// `(ln a, ln b)` so both parameters stay positive.
pub fn fit_ab(min_dist: f64, spread: f64) -> Result<CurveFit, ManifoldError> {
    if !(min_dist >= 0.0) || !(spread > 0.0) {
        return Err(ManifoldError::InvalidConfig(format!(
            "curve fit needs min_dist >= 0 and spread > 0 (got {min_dist}, {spread})"
        )));
    }
    let xs = grid(spread);
    let ys: Vec<f64> = xs.iter().map(|&x| target(x, min_dist, spread)).collect();

    let (mut p, mut q) = (1.0f64.ln(), 1.0f64.ln());
    let mut cost = mse(&xs, &ys, p.exp(), q.exp());
    let mut lambda = 1e-3;
    for _ in 0..MAX_ITERATIONS {
        let (a, b) = (p.exp(), q.exp());
        // normal equations J^T J delta = -J^T r
        let (mut jtj, mut jtr) = ([[0.0f64; 2]; 2], [0.0f64; 2]);
        for (&x, &y) in xs.iter().zip(&ys) {
            if x == 0.0 {
                continue;
            }
            let xp = x.powf(2.0 * b);
            let denom = 1.0 + a * xp;
            let f = 1.0 / denom;
            let r = f - y;
            let dfa = -xp / (denom * denom) * a;
            let dfb = -a * xp * 2.0 * x.ln() / (denom * denom) * b;
            let g = [dfa, dfb];
            for u in 0..2 {
                jtr[u] += g[u] * r;
                for v in 0..2 {
                    jtj[u][v] += g[u] * g[v];
                }
            }
        }
        let mut improved = false;
        for _ in 0..30 {
            let m00 = jtj[0][0] * (1.0 + lambda);
            let m11 = jtj[1][1] * (1.0 + lambda);
            let det = m00 * m11 - jtj[0][1] * jtj[1][0];
            if det == 0.0 || !det.is_finite() {
                lambda *= 10.0;
                continue;
            }
            let dp = -(m11 * jtr[0] - jtj[0][1] * jtr[1]) / det;
            let dq = -(m00 * jtr[1] - jtj[1][0] * jtr[0]) / det;
            let trial = mse(&xs, &ys, (p + dp).exp(), (q + dq).exp());
            if trial.is_finite() && trial < cost {
                let rel = (cost - trial) / cost.max(f64::MIN_POSITIVE);
                p += dp;
                q += dq;
                cost = trial;
                lambda = (lambda * 0.3).max(1e-12);
                improved = rel > 1e-14;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let fit = CurveFit {
        a: p.exp(),
        b: q.exp(),
        residual: cost,
    };
    if !fit.residual.is_finite() || fit.residual > MAX_RESIDUAL {
        return Err(ManifoldError::CurveFit { residual: fit.residual });
    }
    Ok(fit)
}
