//! HDBSCAN over an exact pairwise distance matrix.

mod hierarchy;
mod select;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::manifold::{ManifoldError, Metric};

pub use hierarchy::{
    build_hierarchy, core_distances, core_distances_from_matrix, lambda_of, minimum_spanning_tree, mutual_reachability,
    MstEdge, LAMBDA_CAP,
};
pub use select::{select_clusters, select_leaf_clusters};

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("need more than {needed} points, got {n}")]
    TooFewPoints { n: usize, needed: usize },
    #[error("invalid cluster config: {0}")]
    InvalidConfig(String),
    #[error("non-finite coordinate in row {0}")]
    NonFinite(usize),
    #[error("rows have inconsistent dimensions")]
    Ragged,
    #[error(transparent)]
    Distance(#[from] ManifoldError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0} doc ids for {1} labels")]
    LengthMismatch(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    #[default]
    Leaf,
    ExcessOfMass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterConfig {
    pub min_cluster_size: usize,
    pub min_samples: usize,
    pub metric: Metric,
    pub selection: Selection,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            min_cluster_size: 15,
            min_samples: 1,
            metric: Metric::Euclidean,
            selection: Selection::Leaf,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<(), ClusterError> {
        if self.min_cluster_size < 2 {
            return Err(ClusterError::InvalidConfig("min_cluster_size must be >= 2".into()));
        }
        if self.min_samples < 1 {
            return Err(ClusterError::InvalidConfig("min_samples must be >= 1".into()));
        }
        Ok(())
    }
}

/// One condensed-tree event: `child` leaves `parent` at `lambda`.
/// Cluster ids start at `n_points` (the root); smaller ids are points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondensedNode {
    pub parent: usize,
    pub child: usize,
    pub lambda: f64,
    pub child_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensedTree {
    pub n_points: usize,
    pub min_cluster_size: usize,
    pub nodes: Vec<CondensedNode>,
}

impl CondensedTree {
    pub fn root(&self) -> usize {
        self.n_points
    }

    /// Cluster-to-cluster edges.
    pub fn cluster_edges(&self) -> impl Iterator<Item = &CondensedNode> {
        let n = self.n_points;
        self.nodes.iter().filter(move |e| e.child >= n)
    }

    pub fn n_clusters(&self) -> usize {
        1 + self.cluster_edges().count()
    }

    /// Lambda at which each cluster appears; the root is born at 0.
    pub fn birth_lambdas(&self) -> Vec<f64> {
        let mut birth = vec![0.0; self.n_clusters()];
        for e in self.cluster_edges() {
            birth[e.child - self.n_points] = e.lambda;
        }
        birth
    }

    pub fn to_json(&self) -> Result<String, ClusterError> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    /// `-1` marks noise.
    pub labels: Vec<i64>,
    pub probabilities: Vec<f64>,
}

impl ClusterAssignment {
    pub fn n_clusters(&self) -> usize {
        self.labels.iter().copied().max().map_or(0, |m| (m + 1).max(0) as usize)
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l < 0).count()
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == cluster as i64).collect()
    }

    /// `doc_id,label,probability`.
    pub fn write_csv<W: Write>(&self, doc_ids: &[String], out: W) -> Result<(), ClusterError> {
        if doc_ids.len() != self.labels.len() {
            return Err(ClusterError::LengthMismatch(doc_ids.len(), self.labels.len()));
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["doc_id", "label", "probability"])?;
        for ((id, l), p) in doc_ids.iter().zip(&self.labels).zip(&self.probabilities) {
            w.write_record([id.clone(), l.to_string(), p.to_string()])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<(Vec<String>, Self), ClusterError> {
        let mut r = csv::Reader::from_reader(input);
        let mut ids = Vec::new();
        let mut out = ClusterAssignment { labels: Vec::new(), probabilities: Vec::new() };
        for row in r.deserialize::<(String, i64, f64)>() {
            let (id, l, p) = row?;
            ids.push(id);
            out.labels.push(l);
            out.probabilities.push(p);
        }
        Ok((ids, out))
    }
}

/// Per cluster, member indices by probability descending, ties by lower
/// index, truncated to `k`.
pub fn top_members(assignment: &ClusterAssignment, k: usize) -> Vec<Vec<usize>> {
    (0..assignment.n_clusters())
        .map(|c| {
            let mut m = assignment.members(c);
            m.sort_by(|&a, &b| {
                assignment.probabilities[b]
                    .total_cmp(&assignment.probabilities[a])
                    .then(a.cmp(&b))
            });
            m.truncate(k);
            m
        })
        .collect()
}

/// `build_hierarchy` followed by the configured selection.
pub fn cluster(points: &[Vec<f64>], cfg: &ClusterConfig) -> Result<(CondensedTree, ClusterAssignment), ClusterError> {
    let tree = build_hierarchy(points, cfg)?;
    let assignment = select_clusters(&tree, cfg.selection);
    Ok((tree, assignment))
}
