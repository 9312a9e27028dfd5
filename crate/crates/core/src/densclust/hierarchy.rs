use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{ClusterConfig, ClusterError, CondensedNode, CondensedTree};
use crate::manifold::{pairwise_distance, Metric};

/// Lambda assigned to zero-length merges.
pub const LAMBDA_CAP: f64 = 1e12;

pub fn lambda_of(distance: f64) -> f64 {
    if distance > 0.0 {
        (1.0 / distance).min(LAMBDA_CAP)
    } else {
        LAMBDA_CAP
    }
}

pub fn mutual_reachability(d_ab: f64, core_a: f64, core_b: f64) -> f64 {
    d_ab.max(core_a).max(core_b)
}

fn check_points(points: &[Vec<f64>]) -> Result<(), ClusterError> {
    let dim = points.first().map_or(0, Vec::len);
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(ClusterError::Ragged);
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(ClusterError::NonFinite(i));
        }
    }
    Ok(())
}

/// Distance from each point to its `min_samples`-th nearest other point.
pub fn core_distances(points: &[Vec<f64>], min_samples: usize, metric: Metric) -> Result<Vec<f64>, ClusterError> {
    check_points(points)?;
    let dist = pairwise_distance(points, metric)?;
    core_distances_from_matrix(&dist, min_samples)
}

pub fn core_distances_from_matrix(dist: &[Vec<f64>], min_samples: usize) -> Result<Vec<f64>, ClusterError> {
    let n = dist.len();
    if min_samples == 0 || n <= min_samples {
        return Err(ClusterError::TooFewPoints { n, needed: min_samples });
    }
    Ok(dist
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut others: Vec<f64> = row.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &d)| d).collect();
            let (_, kth, _) = others.select_nth_unstable_by(min_samples - 1, f64::total_cmp);
            *kth
        })
        .collect())
}

/// MST edge with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MstEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

impl MstEdge {
    fn new(u: usize, v: usize, weight: f64) -> Self {
        MstEdge { a: u.min(v), b: u.max(v), weight }
    }

    /// Total order: weight, then lower endpoint, then upper endpoint.
    pub fn key_cmp(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
    }
}

/// Prim's algorithm over the dense mutual-reachability graph, returned in
/// ascending key order. Comparing full keys makes the tree unique.
pub fn minimum_spanning_tree(dist: &[Vec<f64>], cores: &[f64]) -> Vec<MstEdge> {
    let n = dist.len();
    if n < 2 {
        return Vec::new();
    }
    let mr = |u: usize, v: usize| mutual_reachability(dist[u][v], cores[u], cores[v]);
    let mut in_tree = vec![false; n];
    in_tree[0] = true;
    let mut best: Vec<MstEdge> = (0..n).map(|v| MstEdge::new(0, v, mr(0, v))).collect();
    let mut edges = Vec::with_capacity(n - 1);
    for _ in 1..n {
        let v = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&x, &y| best[x].key_cmp(&best[y]))
            .expect("vertices remain");
        in_tree[v] = true;
        edges.push(best[v]);
        for u in 0..n {
            if !in_tree[u] {
                let cand = MstEdge::new(v, u, mr(v, u));
                if cand.key_cmp(&best[u]) == Ordering::Less {
                    best[u] = cand;
                }
            }
        }
    }
    edges.sort_by(MstEdge::key_cmp);
    edges
}

/// Binary single-linkage merges `(left, right, distance, size)`; merge `i`
/// creates node `n + i`.
fn single_linkage(n: usize, edges: &[MstEdge]) -> Vec<(usize, usize, f64, usize)> {
    let mut parent: Vec<usize> = (0..2 * n).collect();
    let mut size = vec![1usize; 2 * n];
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    for (i, e) in edges.iter().enumerate() {
        let (ra, rb) = (find(&mut parent, e.a), find(&mut parent, e.b));
        let node = n + i;
        parent[ra] = node;
        parent[rb] = node;
        size[node] = size[ra] + size[rb];
        out.push((ra, rb, e.weight, size[node]));
    }
    out
}

fn leaves_under(node: usize, n: usize, merges: &[(usize, usize, f64, usize)]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut stack = vec![node];
    while let Some(x) = stack.pop() {
        if x < n {
            out.push(x);
        } else {
            let (l, r, _, _) = merges[x - n];
            stack.push(l);
            stack.push(r);
        }
    }
    out.sort_unstable();
    out
}

/// Walk the dendrogram from the root. A split whose sides both reach
/// `min_cluster_size` creates two child clusters; otherwise the small side's
/// points fall out of the current cluster and the large side keeps its id.
fn condense(n: usize, merges: &[(usize, usize, f64, usize)], min_cluster_size: usize) -> CondensedTree {
    let size = |x: usize| if x < n { 1 } else { merges[x - n].3 };
    let mut nodes = Vec::new();
    if n == 1 {
        nodes.push(CondensedNode { parent: 1, child: 0, lambda: LAMBDA_CAP, child_size: 1 });
    } else {
        let root = 2 * n - 2;
        let mut label = vec![usize::MAX; 2 * n - 1];
        label[root] = n;
        let mut next = n + 1;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(node) = queue.pop_front() {
            let (left, right, dist, _) = merges[node - n];
            let lambda = lambda_of(dist);
            let here = label[node];
            let (big_l, big_r) = (size(left) >= min_cluster_size, size(right) >= min_cluster_size);
            let shed = |side: usize, nodes: &mut Vec<CondensedNode>| {
                for p in leaves_under(side, n, merges) {
                    nodes.push(CondensedNode { parent: here, child: p, lambda, child_size: 1 });
                }
            };
            match (big_l, big_r) {
                (true, true) => {
                    for side in [left, right] {
                        label[side] = next;
                        nodes.push(CondensedNode { parent: here, child: next, lambda, child_size: size(side) });
                        next += 1;
                        queue.push_back(side);
                    }
                }
                (false, false) => {
                    shed(left, &mut nodes);
                    shed(right, &mut nodes);
                }
                (false, true) => {
                    shed(left, &mut nodes);
                    label[right] = here;
                    queue.push_back(right);
                }
                (true, false) => {
                    shed(right, &mut nodes);
                    label[left] = here;
                    queue.push_back(left);
                }
            }
        }
    }
    CondensedTree { n_points: n, min_cluster_size, nodes }
}

/// Core distances, mutual-reachability MST, single-linkage dendrogram and
/// condensation by `min_cluster_size`.
pub fn build_hierarchy(points: &[Vec<f64>], cfg: &ClusterConfig) -> Result<CondensedTree, ClusterError> {
    cfg.validate()?;
    let n = points.len();
    if n < cfg.min_cluster_size || n <= cfg.min_samples {
        return Err(ClusterError::TooFewPoints { n, needed: cfg.min_cluster_size.max(cfg.min_samples + 1) });
    }
    check_points(points)?;
    let dist = pairwise_distance(points, cfg.metric)?;
    let cores = core_distances_from_matrix(&dist, cfg.min_samples)?;
    let edges = minimum_spanning_tree(&dist, &cores);
    let merges = single_linkage(n, &edges);
    Ok(condense(n, &merges, cfg.min_cluster_size))
}


#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    fn cfg(mcs: usize) -> ClusterConfig {
        ClusterConfig { min_cluster_size: mcs, ..Default::default() }
    }

    use super::tests_support::two_groups;

    #[test]
    fn core_distance_examples() {
        let pts = line(&[0.0, 1.0, 2.0, 10.0]);
        assert_eq!(core_distances(&pts, 1, Metric::Euclidean).unwrap(), vec![1.0, 1.0, 1.0, 8.0]);
        assert_eq!(core_distances(&pts, 3, Metric::Euclidean).unwrap(), vec![10.0, 9.0, 8.0, 10.0]);
        let dup = line(&[3.0, 3.0, 7.0]);
        assert_eq!(core_distances(&dup, 1, Metric::Euclidean).unwrap()[..2], [0.0, 0.0]);
        assert!(matches!(core_distances(&pts, 4, Metric::Euclidean), Err(ClusterError::TooFewPoints { .. })));
    }

    #[test]
    fn mutual_reachability_examples() {
        assert_eq!(mutual_reachability(5.0, 1.0, 2.0), 5.0);
        assert_eq!(mutual_reachability(1.0, 4.0, 2.0), 4.0);
        for &(d, a, b) in &[(0.3, 0.1, 0.9), (2.0, 2.0, 0.0), (0.0, 0.0, 0.0)] {
            assert_eq!(mutual_reachability(d, a, b), mutual_reachability(d, b, a));
        }
    }

    #[test]
    fn two_groups_give_two_root_children() {
        let tree = build_hierarchy(&two_groups(), &cfg(6)).unwrap();
        let kids: Vec<_> = tree.cluster_edges().collect();
        assert_eq!(kids.len(), 2);
        assert!(kids.iter().all(|e| e.parent == tree.root() && e.child_size == 6));
    }

    #[test]
    fn identical_points_use_the_cap() {
        let pts = vec![vec![1.5, -2.0]; 9];
        let tree = build_hierarchy(&pts, &cfg(3)).unwrap();
        assert!(tree.nodes.iter().all(|e| e.lambda == LAMBDA_CAP));
        assert!(tree.nodes.iter().all(|e| e.lambda.is_finite()));
    }

    #[test]
    fn minimum_size_input_is_root_only() {
        let pts = line(&[0.0, 0.1, 0.3, 0.35, 2.0]);
        let tree = build_hierarchy(&pts, &cfg(5)).unwrap();
        assert_eq!(tree.n_clusters(), 1);
        assert_eq!(tree.nodes.len(), 5);
        assert!(build_hierarchy(&pts, &cfg(6)).is_err());
    }

    #[test]
    fn lambdas_grow_towards_leaves() {
        let pts: Vec<Vec<f64>> = (0..60)
            .map(|i| {
                let t = i as f64;
                vec![(t * 0.7).sin() * (1.0 + (i % 3) as f64 * 3.0), (t * 1.3).cos() + (i % 5) as f64]
            })
            .collect();
        let tree = build_hierarchy(&pts, &cfg(4)).unwrap();
        let birth = tree.birth_lambdas();
        for e in &tree.nodes {
            assert!(e.lambda >= birth[e.parent - tree.n_points]);
            assert!(e.child_size >= 1);
            if e.child >= tree.n_points {
                assert!(e.child_size >= 4);
            }
        }
        let mut seen = vec![0; 60];
        for e in tree.nodes.iter().filter(|e| e.child < 60) {
            seen[e.child] += 1;
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn prim_matches_total_key_order() {
        // a square: all four sides tie, the diagonal is longer
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
        let dist = pairwise_distance(&pts, Metric::Euclidean).unwrap();
        let edges = minimum_spanning_tree(&dist, &[0.0; 4]);
        let pairs: Vec<(usize, usize)> = edges.iter().map(|e| (e.a, e.b)).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 3), (1, 2)]);
    }
}
