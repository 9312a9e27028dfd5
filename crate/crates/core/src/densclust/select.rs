use super::{ClusterAssignment, CondensedTree, Selection};

pub fn select_clusters(tree: &CondensedTree, selection: Selection) -> ClusterAssignment {
    match selection {
        Selection::Leaf => select_leaf_clusters(tree),
        Selection::ExcessOfMass => select_excess_of_mass(tree),
    }
}

fn cluster_parents(tree: &CondensedTree) -> Vec<Option<usize>> {
    let n = tree.n_points;
    let mut parent = vec![None; tree.n_clusters()];
    for e in tree.cluster_edges() {
        parent[e.child - n] = Some(e.parent - n);
    }
    parent
}

fn has_children(tree: &CondensedTree) -> Vec<bool> {
    let mut out = vec![false; tree.n_clusters()];
    for e in tree.cluster_edges() {
        out[e.parent - tree.n_points] = true;
    }
    out
}

/// Label every point that falls out of a selected cluster, or out of one of
/// its descendants, with that cluster. Clusters are numbered by lowest
/// member index; probability is the point's lambda over the largest lambda
/// in its cluster.
fn assign(tree: &CondensedTree, selected: &[bool]) -> ClusterAssignment {
    let n = tree.n_points;
    let parent = cluster_parents(tree);
    let owner = |mut c: usize| loop {
        if selected[c] {
            return Some(c);
        }
        c = parent[c]?;
    };
    let mut point_cluster = vec![None; n];
    let mut point_lambda = vec![0.0; n];
    for e in tree.nodes.iter().filter(|e| e.child < n) {
        point_cluster[e.child] = owner(e.parent - n);
        point_lambda[e.child] = e.lambda;
    }
    let nc = tree.n_clusters();
    let mut first = vec![usize::MAX; nc];
    let mut lambda_max = vec![0.0f64; nc];
    for p in 0..n {
        if let Some(c) = point_cluster[p] {
            first[c] = first[c].min(p);
            lambda_max[c] = lambda_max[c].max(point_lambda[p]);
        }
    }
    let mut order: Vec<usize> = (0..nc).filter(|&c| first[c] != usize::MAX).collect();
    order.sort_by_key(|&c| first[c]);
    let mut number = vec![-1i64; nc];
    for (i, &c) in order.iter().enumerate() {
        number[c] = i as i64;
    }
    let mut out = ClusterAssignment { labels: vec![-1; n], probabilities: vec![0.0; n] };
    for p in 0..n {
        if let Some(c) = point_cluster[p] {
            out.labels[p] = number[c];
            out.probabilities[p] = if lambda_max[c] > 0.0 {
                (point_lambda[p] / lambda_max[c]).clamp(0.0, 1.0)
            } else {
                1.0
            };
        }
    }
    out
}

/// Clusters without child clusters; the root counts when it never splits.
pub fn select_leaf_clusters(tree: &CondensedTree) -> ClusterAssignment {
    let selected: Vec<bool> = has_children(tree).iter().map(|&h| !h).collect();
    assign(tree, &selected)
}

/// Stability-maximizing selection; the root is chosen only when it never
/// splits.
fn select_excess_of_mass(tree: &CondensedTree) -> ClusterAssignment {
    let n = tree.n_points;
    let nc = tree.n_clusters();
    let birth = tree.birth_lambdas();
    let mut stability = vec![0.0; nc];
    for e in &tree.nodes {
        let c = e.parent - n;
        stability[c] += (e.lambda - birth[c]) * e.child_size as f64;
    }
    let parent = cluster_parents(tree);
    let kids = has_children(tree);
    let mut children_sum = vec![0.0; nc];
    let mut selected = vec![false; nc];
    // child ids always exceed their parent's
    for c in (1..nc).rev() {
        if kids[c] && children_sum[c] > stability[c] {
            stability[c] = children_sum[c];
        } else {
            selected[c] = true;
        }
        if let Some(p) = parent[c] {
            children_sum[p] += stability[c];
        }
    }
    if !kids[0] {
        selected[0] = true;
    }
    // keep only the topmost selected cluster on each path
    for c in 1..nc {
        let mut a = parent[c];
        while let Some(p) = a {
            if selected[p] {
                selected[c] = false;
                break;
            }
            a = parent[p];
        }
    }
    assign(tree, &selected)
}

#[cfg(test)]
mod tests {
    use super::super::{build_hierarchy, ClusterConfig, CondensedNode};
    use super::*;

    fn cfg(mcs: usize) -> ClusterConfig {
        ClusterConfig { min_cluster_size: mcs, ..Default::default() }
    }

    #[test]
    fn two_blobs_no_noise() {
        let pts = super::super::hierarchy::tests_support::two_groups();
        let tree = build_hierarchy(&pts, &cfg(6)).unwrap();
        let a = select_leaf_clusters(&tree);
        assert_eq!(a.labels, [vec![0; 6], vec![1; 6]].concat());
        assert_eq!(a.noise_count(), 0);
        for c in 0..2 {
            let best = a.members(c).iter().map(|&i| a.probabilities[i]).fold(0.0, f64::max);
            assert_eq!(best, 1.0);
        }
    }

    fn node(parent: usize, child: usize, lambda: f64, child_size: usize) -> CondensedNode {
        CondensedNode { parent, child, lambda, child_size }
    }

    #[test]
    fn shed_points_inside_and_before_leaves() {
        // 7 points, root 7 sheds point 6 at 0.5, then splits into 8 = {0,1,2}
        // and 9 = {3,4,5} at 1.0; point 2 leaves cluster 8 early at 2.0
        let tree = CondensedTree {
            n_points: 7,
            min_cluster_size: 3,
            nodes: vec![
                node(7, 6, 0.5, 1),
                node(7, 8, 1.0, 3),
                node(7, 9, 1.0, 3),
                node(8, 2, 2.0, 1),
                node(8, 0, 4.0, 1),
                node(8, 1, 4.0, 1),
                node(9, 3, 3.0, 1),
                node(9, 4, 3.0, 1),
                node(9, 5, 3.0, 1),
            ],
        };
        let a = select_leaf_clusters(&tree);
        assert_eq!(a.labels, vec![0, 0, 0, 1, 1, 1, -1]);
        assert_eq!(a.probabilities, vec![1.0, 1.0, 0.5, 1.0, 1.0, 1.0, 0.0]);

        let eom = select_clusters(&tree, Selection::ExcessOfMass);
        assert_eq!(eom.labels, a.labels);
    }

    #[test]
    fn excess_of_mass_prefers_stable_parent() {
        // children appear late and die quickly: the parent is more stable
        let tree = CondensedTree {
            n_points: 4,
            min_cluster_size: 2,
            nodes: vec![
                node(4, 5, 1.0, 4),
                node(5, 6, 10.0, 2),
                node(5, 7, 10.0, 2),
                node(6, 0, 10.5, 1),
                node(6, 1, 10.5, 1),
                node(7, 2, 10.5, 1),
                node(7, 3, 10.5, 1),
            ],
        };
        let eom = select_clusters(&tree, Selection::ExcessOfMass);
        assert_eq!(eom.labels, vec![0, 0, 0, 0]);
        let leaf = select_leaf_clusters(&tree);
        assert_eq!(leaf.labels, vec![0, 0, 1, 1]);
    }
}
