use serde::{Deserialize, Serialize};

use super::NeighborGraph;

pub const SIGMA_MIN: f64 = 1e-5;
pub const SIGMA_MAX: f64 = 1e5;
const SIGMA_ITERATIONS: usize = 64;

/// Per-point bandwidth calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothKnn {
    pub rhos: Vec<f64>,
    pub sigmas: Vec<f64>,
    /// `sum_j exp(-max(0, d_ij - rho_i) / sigma_i) - log2(k)` at the chosen sigma.
    pub residuals: Vec<f64>,
    pub clamped: Vec<usize>,
}

fn membership_sum(dists: &[f64], rho: f64, sigma: f64) -> f64 {
    dists.iter().map(|&d| (-(d - rho).max(0.0) / sigma).exp()).sum()
}

/// Solve `sum_j exp(-max(0, d_ij - rho_i) / sigma_i) = log2(k)` for every
/// point by bisection on `[SIGMA_MIN, SIGMA_MAX]`. The sum increases with
/// sigma; when the target lies outside the bracket the nearer end is used
/// and the point is reported as clamped.
pub fn smooth_knn_distances(graph: &NeighborGraph) -> SmoothKnn {
    let k = graph.k();
    let target = (k as f64).log2();
    let n = graph.len();
    let mut out = SmoothKnn {
        rhos: Vec::with_capacity(n),
        sigmas: Vec::with_capacity(n),
        residuals: Vec::with_capacity(n),
        clamped: Vec::new(),
    };
    for (i, dists) in graph.distances.iter().enumerate() {
        let rho = dists.first().copied().unwrap_or(0.0);
        let (mut lo, mut hi) = (SIGMA_MIN, SIGMA_MAX);
        let sigma = if membership_sum(dists, rho, lo) >= target {
            out.clamped.push(i);
            lo
        } else if membership_sum(dists, rho, hi) <= target {
            out.clamped.push(i);
            hi
        } else {
            for _ in 0..SIGMA_ITERATIONS {
                let mid = 0.5 * (lo + hi);
                if membership_sum(dists, rho, mid) > target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        };
        out.residuals.push(membership_sum(dists, rho, sigma) - target);
        out.rhos.push(rho);
        out.sigmas.push(sigma);
    }
    out
}

/// Symmetric sparse membership graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzySimplicialSet {
    /// `rows[i]` holds `(j, w_ij)` sorted by `j`, with `w_ij` in `(0, 1]`.
    pub rows: Vec<Vec<(usize, f64)>>,
    pub smooth: SmoothKnn,
    pub clamped: Vec<usize>,
}

impl FuzzySimplicialSet {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&j, |&(c, _)| c)
            .map_or(0.0, |p| self.rows[i][p].1)
    }

    /// Build directly from symmetric entries, e.g. for hand-made graphs.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut rows = vec![Vec::new(); n];
        for &(i, j, w) in edges {
            rows[i].push((j, w));
            rows[j].push((i, w));
        }
        for r in &mut rows {
            r.sort_by_key(|&(j, _)| j);
        }
        FuzzySimplicialSet {
            rows,
            smooth: SmoothKnn {
                rhos: vec![0.0; n],
                sigmas: vec![1.0; n],
                residuals: vec![0.0; n],
                clamped: Vec::new(),
            },
            clamped: Vec::new(),
        }
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                worst = worst.max((w - self.weight(j, i)).abs());
            }
        }
        worst
    }
}

/// Directed memberships `exp(-max(0, d - rho) / sigma)` combined by the
/// probabilistic t-conorm `a + b - ab`. Each unordered pair is combined
/// once, as `hi + lo * (1 - hi)`, so the matrix is exactly symmetric and a
/// directed weight of 1 stays exactly 1.
pub fn fuzzy_simplicial_set(graph: &NeighborGraph) -> FuzzySimplicialSet {
    let n = graph.len();
    let smooth = smooth_knn_distances(graph);
    let mut directed: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); n];
    for i in 0..n {
        for (&j, &d) in graph.indices[i].iter().zip(&graph.distances[i]) {
            let w = (-(d - smooth.rhos[i]).max(0.0) / smooth.sigmas[i]).exp();
            if w > 0.0 && j != i {
                directed[i].insert(j, w);
            }
        }
    }
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        for (&j, &a) in &directed[i] {
            let b = directed[j].get(&i).copied().unwrap_or(0.0);
            if b > 0.0 && j < i {
                // pair already combined from j's side
                continue;
            }
            let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
            let w = hi + lo * (1.0 - hi);
            rows[i].push((j, w));
            rows[j].push((i, w));
        }
    }
    for r in &mut rows {
        r.sort_by_key(|&(j, _)| j);
    }
    let clamped = smooth.clamped.clone();
    FuzzySimplicialSet { rows, smooth, clamped }
}
