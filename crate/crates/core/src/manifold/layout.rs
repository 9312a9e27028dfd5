use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::LayoutRng;
use super::{spectral_layout, CurveFit, FuzzySimplicialSet, ManifoldError, ProjectionConfig};

/// Per-coordinate clip applied to every gradient step.
pub const MAX_STEP: f64 = 4.0;
const INIT_NOISE: f64 = 1e-4;
const INIT_EXTENT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutParams {
    pub n_components: usize,
    pub n_epochs: usize,
    pub learning_rate: f64,
    pub negative_sample_rate: usize,
    pub a: f64,
    pub b: f64,
    pub seed: u64,
    pub parallel: bool,
}

impl LayoutParams {
    pub fn from_config(cfg: &ProjectionConfig, curve: &CurveFit) -> Self {
        LayoutParams {
            n_components: cfg.n_components,
            n_epochs: cfg.n_epochs,
            learning_rate: cfg.learning_rate,
            negative_sample_rate: cfg.negative_sample_rate,
            a: curve.a,
            b: curve.b,
            seed: cfg.seed,
            parallel: cfg.parallel,
        }
    }
}

fn clip(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(-MAX_STEP, MAX_STEP)
    }
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn attract_coeff(d2: f64, a: f64, b: f64) -> f64 {
    if d2 > 0.0 {
        -2.0 * a * b * d2.powf(b - 1.0) / (a * d2.powf(b) + 1.0)
    } else {
        0.0
    }
}

fn repel_coeff(d2: f64, a: f64, b: f64) -> f64 {
    if d2 > 0.0 {
        2.0 * b / ((0.001 + d2) * (a * d2.powf(b) + 1.0))
    } else {
        0.0
    }
}

/// Spectral coordinates scaled to `[-10, 10]` plus seeded jitter, or seeded
/// uniform noise when the eigensolve is unavailable; then every column is
/// rescaled to `[0, 10]`.
fn initial_layout(graph: &FuzzySimplicialSet, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = graph.len();
    let mut rng = LayoutRng::for_init(seed);
    let mut coords = match spectral_layout(graph, dim) {
        Some(mut c) => {
            let max = c.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
            let scale = if max > 0.0 { INIT_EXTENT / max } else { 1.0 };
            for row in &mut c {
                for x in row.iter_mut() {
                    *x = *x * scale + rng.uniform(-INIT_NOISE, INIT_NOISE);
                }
            }
            c
        }
        None => {
            log::debug!("spectral initialization unavailable for {n} points; using seeded noise");
            (0..n)
                .map(|_| (0..dim).map(|_| rng.uniform(-INIT_EXTENT, INIT_EXTENT)).collect())
                .collect()
        }
    };
    for c in 0..dim {
        let (lo, hi) = coords
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[c]), hi.max(r[c])));
        let span = hi - lo;
        for row in &mut coords {
            row[c] = if span > 0.0 { INIT_EXTENT * (row[c] - lo) / span } else { 0.0 };
        }
    }
    coords
}

struct Edge {
    head: usize,
    tail: usize,
    epochs_per_sample: f64,
}

/// Stochastic layout: edges are sampled in proportion to their weight, each
/// sample pulls the pair together along the curve gradient and pushes the
/// head away from `negative_sample_rate` uniformly drawn vertices. The
/// learning rate decays linearly to zero over `n_epochs`.
pub fn optimize_layout(graph: &FuzzySimplicialSet, p: &LayoutParams) -> Result<Vec<Vec<f64>>, ManifoldError> {
    let n = graph.len();
    let dim = p.n_components;
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![vec![0.0; dim]]);
    }
    if let Some(bad) = graph.rows.iter().flatten().find(|&&(j, _)| j >= n) {
        return Err(ManifoldError::PointCountMismatch { graph: bad.0 + 1, expected: n });
    }
    let mut emb = initial_layout(graph, dim, p.seed);

    let max_w = graph.rows.iter().flatten().fold(0.0f64, |m, &(_, w)| m.max(w));
    if max_w <= 0.0 {
        return Ok(emb);
    }
    // edges too weak to be sampled even once are dropped
    let floor = max_w / p.n_epochs as f64;
    let edges: Vec<Edge> = graph
        .rows
        .iter()
        .enumerate()
        .flat_map(|(i, row)| {
            row.iter()
                .filter(move |&&(_, w)| w >= floor)
                .map(move |&(j, w)| Edge { head: i, tail: j, epochs_per_sample: max_w / w })
        })
        .collect();

    if p.parallel {
        optimize_parallel(&mut emb, &edges, n, p);
    } else {
        optimize_sequential(&mut emb, &edges, n, p);
    }
    if let Some(i) = emb.iter().position(|r| r.iter().any(|x| !x.is_finite())) {
        return Err(ManifoldError::NonFinite(i));
    }
    Ok(emb)
}

fn optimize_sequential(emb: &mut [Vec<f64>], edges: &[Edge], n: usize, p: &LayoutParams) {
    let dim = p.n_components;
    let neg_rate = p.negative_sample_rate as f64;
    let mut next_sample: Vec<f64> = edges.iter().map(|e| e.epochs_per_sample).collect();
    let per_negative: Vec<f64> = edges.iter().map(|e| e.epochs_per_sample / neg_rate.max(1.0)).collect();
    let mut next_negative = per_negative.clone();
    let mut grad = vec![0.0; dim];

    for epoch in 0..p.n_epochs {
        let alpha = p.learning_rate * (1.0 - epoch as f64 / p.n_epochs as f64);
        let mut rng = LayoutRng::for_epoch(p.seed, epoch);
        let now = epoch as f64;
        for (e, edge) in edges.iter().enumerate() {
            if next_sample[e] > now {
                continue;
            }
            let (i, j) = (edge.head, edge.tail);
            let d2 = dist_sq(&emb[i], &emb[j]);
            let coeff = attract_coeff(d2, p.a, p.b);
            for d in 0..dim {
                grad[d] = clip(coeff * (emb[i][d] - emb[j][d]));
            }
            for d in 0..dim {
                emb[i][d] += grad[d] * alpha;
                emb[j][d] -= grad[d] * alpha;
            }
            next_sample[e] += edge.epochs_per_sample;

            if p.negative_sample_rate == 0 {
                continue;
            }
            let n_neg = ((now - next_negative[e]) / per_negative[e]).floor().max(0.0) as usize;
            for _ in 0..n_neg {
                let k = rng.index(n);
                if k == i {
                    continue;
                }
                let d2 = dist_sq(&emb[i], &emb[k]);
                let coeff = repel_coeff(d2, p.a, p.b);
                if coeff <= 0.0 {
                    continue;
                }
                for d in 0..dim {
                    let g = clip(coeff * (emb[i][d] - emb[k][d]));
                    emb[i][d] += g * alpha;
                }
            }
            next_negative[e] += n_neg as f64 * per_negative[e];
        }
    }
}

/// Vertex-parallel variant: every vertex moves only itself, reading the
/// other vertices from the previous epoch's snapshot.
fn optimize_parallel(emb: &mut [Vec<f64>], edges: &[Edge], n: usize, p: &LayoutParams) {
    let dim = p.n_components;
    let neg_rate = p.negative_sample_rate as f64;
    let mut by_head: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, edge) in edges.iter().enumerate() {
        by_head[edge.head].push(e);
    }
    let mut next_sample: Vec<f64> = edges.iter().map(|e| e.epochs_per_sample).collect();
    let per_negative: Vec<f64> = edges.iter().map(|e| e.epochs_per_sample / neg_rate.max(1.0)).collect();
    let mut next_negative = per_negative.clone();

    for epoch in 0..p.n_epochs {
        let alpha = p.learning_rate * (1.0 - epoch as f64 / p.n_epochs as f64);
        let now = epoch as f64;
        let snapshot = emb.to_vec();
        let updates: Vec<(Vec<f64>, Vec<(usize, f64, f64)>)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = LayoutRng::for_vertex(p.seed, epoch, i);
                let mut cur = snapshot[i].clone();
                let mut sched = Vec::new();
                for &e in &by_head[i] {
                    if next_sample[e] > now {
                        continue;
                    }
                    let j = edges[e].tail;
                    let coeff = attract_coeff(dist_sq(&cur, &snapshot[j]), p.a, p.b);
                    for d in 0..dim {
                        cur[d] += clip(coeff * (cur[d] - snapshot[j][d])) * alpha;
                    }
                    let n_neg = if p.negative_sample_rate == 0 {
                        0
                    } else {
                        ((now - next_negative[e]) / per_negative[e]).floor().max(0.0) as usize
                    };
                    for _ in 0..n_neg {
                        let k = rng.index(n);
                        if k == i {
                            continue;
                        }
                        let coeff = repel_coeff(dist_sq(&cur, &snapshot[k]), p.a, p.b);
                        if coeff > 0.0 {
                            for d in 0..dim {
                                cur[d] += clip(coeff * (cur[d] - snapshot[k][d])) * alpha;
                            }
                        }
                    }
                    sched.push((e, edges[e].epochs_per_sample, n_neg as f64 * per_negative[e]));
                }
                (cur, sched)
            })
            .collect();
        for (i, (row, sched)) in updates.into_iter().enumerate() {
            emb[i] = row;
            for (e, ds, dn) in sched {
                next_sample[e] += ds;
                next_negative[e] += dn;
            }
        }
    }
}
