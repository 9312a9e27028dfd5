use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ManifoldError, Metric};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborGraph {
    /// `indices[i]` lists the k nearest other points of `i`, nearest first.
    pub indices: Vec<Vec<usize>>,
    pub distances: Vec<Vec<f64>>,
}

impl NeighborGraph {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn k(&self) -> usize {
        self.indices.first().map_or(0, Vec::len)
    }
}

pub fn pairwise_distance(rows: &[Vec<f64>], metric: Metric) -> Result<Vec<Vec<f64>>, ManifoldError> {
    rows.par_iter()
        .map(|a| rows.iter().map(|b| metric.distance(a, b).map_err(ManifoldError::from)).collect())
        .collect()
}

/// Exact k nearest neighbours by full pairwise scan. Ties go to the lower index.
pub fn knn_graph(rows: &[Vec<f64>], k: usize, metric: Metric) -> Result<NeighborGraph, ManifoldError> {
    let n = rows.len();
    if k == 0 || k + 1 > n {
        return Err(ManifoldError::KOutOfRange { k, n });
    }
    let per_row: Vec<(Vec<usize>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
            for (j, other) in rows.iter().enumerate() {
                if j != i {
                    cand.push((metric.distance(&rows[i], other)?, j));
                }
            }
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            cand.truncate(k);
            Ok(cand.into_iter().map(|(d, j)| (j, d)).unzip())
        })
        .collect::<Result<_, ManifoldError>>()?;
    let (indices, distances) = per_row.into_iter().unzip();
    Ok(NeighborGraph { indices, distances })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_points() {
        let rows = vec![vec![0.0], vec![1.0], vec![3.0]];
        let g = knn_graph(&rows, 1, Metric::Euclidean).unwrap();
        assert_eq!(g.indices, vec![vec![1], vec![0], vec![1]]);
        assert_eq!(g.distances, vec![vec![1.0], vec![1.0], vec![2.0]]);
    }

    #[test]
    fn duplicate_point_listed_first() {
        let rows = vec![vec![0.0, 0.0], vec![5.0, 5.0], vec![1.0, 0.0], vec![0.0, 0.0]];
        let g = knn_graph(&rows, 2, Metric::Euclidean).unwrap();
        assert_eq!(g.indices[0][0], 3);
        assert_eq!(g.distances[0][0], 0.0);
        assert_eq!(g.indices[3][0], 0);
    }

    #[test]
    fn full_graph_when_k_is_n_minus_one() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 * 1.5, (i * i) as f64]).collect();
        let g = knn_graph(&rows, 5, Metric::Euclidean).unwrap();
        for (i, nbrs) in g.indices.iter().enumerate() {
            let mut sorted = nbrs.clone();
            sorted.sort();
            let expected: Vec<usize> = (0..6).filter(|&j| j != i).collect();
            assert_eq!(sorted, expected);
        }
    }

    #[test]
    fn ties_break_to_lower_index() {
        let rows = vec![vec![0.0], vec![-1.0], vec![1.0]];
        let g = knn_graph(&rows, 2, Metric::Euclidean).unwrap();
        assert_eq!(g.indices[0], vec![1, 2]);
    }

    #[test]
    fn rows_sorted_and_self_excluded() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![(i as f64).sin(), (i as f64 * 0.7).cos(), 0.3]).collect();
        let g = knn_graph(&rows, 4, Metric::Cosine).unwrap();
        for (i, (idx, d)) in g.indices.iter().zip(&g.distances).enumerate() {
            assert!(!idx.contains(&i));
            assert!(d.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn k_out_of_range() {
        let rows = vec![vec![0.0], vec![1.0]];
        assert!(matches!(knn_graph(&rows, 2, Metric::Euclidean), Err(ManifoldError::KOutOfRange { k: 2, n: 2 })));
        assert!(knn_graph(&rows, 0, Metric::Euclidean).is_err());
    }
}
