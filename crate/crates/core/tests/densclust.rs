mod support;

use litscape_core::densclust::{cluster, select_leaf_clusters, build_hierarchy, ClusterConfig, Selection};
use litscape_core::manifold::rng::LayoutRng;
use support::{hdbscan_oracle, random_points};

fn cfg(mcs: usize, ms: usize) -> ClusterConfig {
    ClusterConfig { min_cluster_size: mcs, min_samples: ms, ..Default::default() }
}

#[test]
fn matches_reference_across_min_samples() {
    let mut rng = LayoutRng::new(11, 0);
    for _ in 0..400 {
        let mcs = 2 + rng.index(4);
        let ms = 1 + rng.index(3);
        let n = (mcs.max(ms + 1) + rng.index(8)).min(12).max(mcs);
        let pts = random_points(&mut rng, n);
        let (_, got) = cluster(&pts, &cfg(mcs, ms)).unwrap();
        let (labels, probs) = hdbscan_oracle::leaf_clusters(&pts, mcs, ms);
        assert_eq!(got.labels, labels, "{pts:?} mcs={mcs} ms={ms}");
        for (a, b) in got.probabilities.iter().zip(&probs) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn clusters_respect_minimum_size() {
    let mut rng = LayoutRng::new(5, 0);
    for _ in 0..200 {
        let n = 20 + rng.index(40);
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![(i % 3) as f64 * 2.0 + rng.uniform(0.0, 0.8), rng.uniform(0.0, 1.0)])
            .collect();
        for sel in [Selection::Leaf, Selection::ExcessOfMass] {
            let c = ClusterConfig { selection: sel, ..cfg(5, 1) };
            let (_, a) = cluster(&pts, &c).unwrap();
            for k in 0..a.n_clusters() {
                assert!(a.members(k).len() >= 5);
            }
            for (l, p) in a.labels.iter().zip(&a.probabilities) {
                assert!((0.0..=1.0).contains(p));
                assert_eq!(*l < 0, *p == 0.0);
            }
        }
    }
}

#[test]
fn permutation_equivariance() {
    let mut rng = LayoutRng::new(21, 0);
    for _ in 0..50 {
        let n = 30 + rng.index(20);
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![(i % 4) as f64 * 1.5 + rng.uniform(0.0, 0.6), rng.uniform(0.0, 0.6)])
            .collect();
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.index(i + 1));
        }
        let shuffled: Vec<Vec<f64>> = perm.iter().map(|&i| pts[i].clone()).collect();
        let (_, a) = cluster(&pts, &cfg(6, 1)).unwrap();
        let (_, b) = cluster(&shuffled, &cfg(6, 1)).unwrap();
        let mut map = std::collections::HashMap::new();
        for (pos, &orig) in perm.iter().enumerate() {
            let (la, lb) = (a.labels[orig], b.labels[pos]);
            assert_eq!(la < 0, lb < 0);
            if la >= 0 {
                assert_eq!(*map.entry(la).or_insert(lb), lb);
            }
            assert!((a.probabilities[orig] - b.probabilities[pos]).abs() < 1e-12);
        }
        assert_eq!(a.n_clusters(), b.n_clusters());
    }
}

#[test]
fn noise_can_drop_when_min_cluster_size_grows() {
    // with 3 the root sheds the outlier and splits into two triples; with 4
    // no split is possible, so the root is the only leaf and owns everything
    let pts = vec![
        vec![0.0, 0.0],
        vec![0.1, 0.0],
        vec![0.0, 0.1],
        vec![5.0, 5.0],
        vec![5.1, 5.0],
        vec![5.0, 5.1],
        vec![20.0, -20.0],
    ];
    let (_, small) = cluster(&pts, &cfg(3, 1)).unwrap();
    let (_, large) = cluster(&pts, &cfg(4, 1)).unwrap();
    assert_eq!(small.labels, vec![0, 0, 0, 1, 1, 1, -1]);
    assert_eq!(small.noise_count(), 1);
    assert_eq!(large.noise_count(), 0);
}

#[test]
fn tree_json_export() {
    let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * i) as f64 * 0.1]).collect();
    let tree = build_hierarchy(&pts, &cfg(3, 1)).unwrap();
    let json = tree.to_json().unwrap();
    let back: litscape_core::densclust::CondensedTree = serde_json::from_str(&json).unwrap();
    assert_eq!(back, tree);
    assert_eq!(select_leaf_clusters(&back), select_leaf_clusters(&tree));
}
