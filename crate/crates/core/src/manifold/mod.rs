//! UMAP-style manifold projection.
//!
//! `project` composes the four steps: exact k-NN graph, fuzzy simplicial
//! set, low-dimensional curve fit, and stochastic layout optimization.
//! Everything that consumes randomness draws from [`rng::LayoutRng`], so a
//! `(matrix, config)` pair always yields the same bits.

mod curve;
mod fuzzy;
mod knn;
mod layout;
pub mod rng;
mod spectral;

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{EmbeddingError, EmbeddingMatrix};

pub use curve::{fit_ab, CurveFit, CURVE_GRID_POINTS};
pub use fuzzy::{fuzzy_simplicial_set, smooth_knn_distances, FuzzySimplicialSet, SmoothKnn, SIGMA_MAX, SIGMA_MIN};
pub use knn::{knn_graph, pairwise_distance, NeighborGraph};
pub use layout::{optimize_layout, LayoutParams, MAX_STEP};
pub use spectral::spectral_layout;

#[derive(Debug, Error)]
pub enum ManifoldError {
    #[error("invalid projection config: {0}")]
    InvalidConfig(String),
    #[error("k = {k} out of range for {n} points")]
    KOutOfRange { k: usize, n: usize },
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("graph has {graph} points but {expected} were expected")]
    PointCountMismatch { graph: usize, expected: usize },
    #[error("curve fit did not converge (residual {residual:.3e})")]
    CurveFit { residual: f64 },
    #[error("non-finite input coordinate in row {0}")]
    NonFinite(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Cosine,
    Euclidean,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> Result<f64, EmbeddingError> {
        match self {
            Metric::Cosine => crate::embedding::cosine_distance(a, b),
            Metric::Euclidean => Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectionConfig {
    pub n_neighbors: usize,
    pub n_components: usize,
    pub min_dist: f64,
    pub spread: f64,
    pub metric: Metric,
    pub seed: u64,
    pub n_epochs: usize,
    pub learning_rate: f64,
    pub negative_sample_rate: usize,
    /// Vertex-parallel layout; deterministic but not bit-identical to the
    /// sequential optimizer.
    pub parallel: bool,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig {
            n_neighbors: 10,
            n_components: 10,
            min_dist: 0.0,
            spread: 1.0,
            metric: Metric::Cosine,
            seed: 42,
            n_epochs: 500,
            learning_rate: 1.0,
            negative_sample_rate: 5,
            parallel: false,
        }
    }
}

impl ProjectionConfig {
    pub fn validate(&self, n_points: usize) -> Result<(), ManifoldError> {
        let bad = |m: String| Err(ManifoldError::InvalidConfig(m));
        if self.n_neighbors < 2 || self.n_neighbors >= n_points {
            return bad(format!("need 2 <= n_neighbors < n_points, got {} with {n_points} points", self.n_neighbors));
        }
        if self.n_components == 0 {
            return bad("n_components must be >= 1".into());
        }
        if !(self.min_dist >= 0.0) || !(self.spread > 0.0) {
            return bad("min_dist must be >= 0 and spread > 0".into());
        }
        if !(self.learning_rate > 0.0) || self.n_epochs == 0 {
            return bad("learning_rate and n_epochs must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub doc_ids: Vec<String>,
    pub coords: Vec<Vec<f64>>,
    pub config: ProjectionConfig,
    pub curve: Option<CurveFit>,
    /// Points whose bandwidth search hit the clamp interval.
    pub clamped_points: Vec<usize>,
}

impl Projection {
    pub fn n_components(&self) -> usize {
        self.coords.first().map_or(self.config.n_components, Vec::len)
    }

    /// `doc_id,c0,...,c{k-1}`; values use Rust's shortest round-trip formatting.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let k = self.n_components();
        let header: Vec<String> = std::iter::once("doc_id".to_string())
            .chain((0..k).map(|i| format!("c{i}")))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for (id, row) in self.doc_ids.iter().zip(&self.coords) {
            let vals: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            writeln!(out, "{},{}", id, vals.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv(text: &str, config: ProjectionConfig) -> Result<Self, ManifoldError> {
        let mut doc_ids = Vec::new();
        let mut coords = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            doc_ids.push(parts.next().unwrap_or_default().to_string());
            let row: Result<Vec<f64>, _> = parts.map(str::parse::<f64>).collect();
            coords.push(row.map_err(|_| ManifoldError::NonFinite(i - 1))?);
        }
        Ok(Projection {
            doc_ids,
            coords,
            config,
            curve: None,
            clamped_points: Vec::new(),
        })
    }
}

/// knn_graph, fuzzy_simplicial_set, fit_ab, optimize_layout.
pub fn project(matrix: &EmbeddingMatrix, cfg: &ProjectionConfig) -> Result<Projection, ManifoldError> {
    cfg.validate(matrix.len())?;
    if let Some(i) = matrix.rows.iter().position(|r| r.iter().any(|v| !v.is_finite())) {
        return Err(ManifoldError::NonFinite(i));
    }
    let graph = knn_graph(&matrix.rows, cfg.n_neighbors, cfg.metric)?;
    let fss = fuzzy_simplicial_set(&graph);
    let curve = fit_ab(cfg.min_dist, cfg.spread)?;
    let params = LayoutParams::from_config(cfg, &curve);
    let coords = optimize_layout(&fss, &params)?;
    Ok(Projection {
        doc_ids: matrix.doc_ids.clone(),
        coords,
        config: cfg.clone(),
        curve: Some(curve),
        clamped_points: fss.clamped.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_bounds() {
        let cfg = ProjectionConfig::default();
        assert!(cfg.validate(11).is_ok());
        assert!(cfg.validate(10).is_err());
        let mut c = cfg.clone();
        c.n_neighbors = 1;
        assert!(c.validate(100).is_err());
        c.n_neighbors = 5;
        c.n_components = 0;
        assert!(c.validate(100).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let p = Projection {
            doc_ids: vec!["a".into(), "b".into()],
            coords: vec![vec![0.1, -2.5], vec![1e-9, 3.0]],
            config: ProjectionConfig::default(),
            curve: None,
            clamped_points: vec![],
        };
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("doc_id,c0,c1\na,0.1,-2.5\n"));
        let back = Projection::read_csv(&text, ProjectionConfig::default()).unwrap();
        assert_eq!(back.coords, p.coords);
    }
}
