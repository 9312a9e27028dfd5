//! Reference HDBSCAN: Kruskal over every edge of the complete
//! mutual-reachability graph, then top-down removal of the heaviest
//! remaining tree edge with explicit component search.

use std::cmp::Ordering;
use std::collections::VecDeque;

const CAP: f64 = 1e12;

fn lambda(d: f64) -> f64 {
    if d == 0.0 || 1.0 / d > CAP {
        CAP
    } else {
        1.0 / d
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        s += (a[k] - b[k]) * (a[k] - b[k]);
    }
    s.sqrt()
}

type Edge = (f64, usize, usize);

fn key(a: &Edge, b: &Edge) -> Ordering {
    a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
}

fn mst(points: &[Vec<f64>], min_samples: usize) -> Vec<Edge> {
    let n = points.len();
    let core: Vec<f64> = (0..n)
        .map(|i| {
            let mut d: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| euclid(&points[i], &points[j])).collect();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            d[min_samples - 1]
        })
        .collect();
    let mut all = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let w = euclid(&points[i], &points[j]).max(core[i]).max(core[j]);
            all.push((w, i, j));
        }
    }
    all.sort_by(key);
    let mut comp: Vec<usize> = (0..n).collect();
    let mut tree = Vec::new();
    for e in all {
        let (ci, cj) = (comp[e.1], comp[e.2]);
        if ci != cj {
            for c in comp.iter_mut() {
                if *c == cj {
                    *c = ci;
                }
            }
            tree.push(e);
        }
    }
    tree
}

fn component(start: usize, edges: &[Edge]) -> Vec<usize> {
    let mut seen = vec![start];
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for e in edges {
            let other = if e.1 == v {
                e.2
            } else if e.2 == v {
                e.1
            } else {
                continue;
            };
            if !seen.contains(&other) {
                seen.push(other);
                queue.push_back(other);
            }
        }
    }
    seen
}

struct State {
    mcs: usize,
    /// `(parent, child)` cluster links.
    links: Vec<(usize, usize)>,
    /// Per point: `(cluster it falls out of, lambda)`.
    fall: Vec<(usize, f64)>,
    n_clusters: usize,
}

fn split(state: &mut State, members: Vec<usize>, edges: Vec<Edge>, cluster: usize) {
    let Some(heaviest) = edges.iter().copied().max_by(key) else {
        for p in members {
            state.fall[p] = (cluster, CAP);
        }
        return;
    };
    let rest: Vec<Edge> = edges.iter().copied().filter(|e| key(e, &heaviest) != Ordering::Equal).collect();
    let side_a = component(heaviest.1, &rest);
    let side_b = component(heaviest.2, &rest);
    let l = lambda(heaviest.0);
    let within = |side: &[usize]| -> Vec<Edge> { rest.iter().copied().filter(|e| side.contains(&e.1)).collect() };
    let big_a = side_a.len() >= state.mcs;
    let big_b = side_b.len() >= state.mcs;
    if big_a && big_b {
        for side in [side_a, side_b] {
            let id = state.n_clusters;
            state.n_clusters += 1;
            state.links.push((cluster, id));
            let e = within(&side);
            split(state, side, e, id);
        }
        return;
    }
    for (side, big) in [(&side_a, big_a), (&side_b, big_b)] {
        if big {
            let e = within(side);
            split(state, side.clone(), e, cluster);
        } else {
            for &p in side {
                state.fall[p] = (cluster, l);
            }
        }
    }
}

/// Leaf-selected labels and probabilities.
pub fn leaf_clusters(points: &[Vec<f64>], min_cluster_size: usize, min_samples: usize) -> (Vec<i64>, Vec<f64>) {
    let n = points.len();
    let tree = mst(points, min_samples);
    let mut state = State { mcs: min_cluster_size, links: Vec::new(), fall: vec![(0, 0.0); n], n_clusters: 1 };
    split(&mut state, (0..n).collect(), tree, 0);

    let is_leaf = |c: usize| !state.links.iter().any(|&(p, _)| p == c);
    let mut leaves: Vec<(usize, usize)> = (0..state.n_clusters)
        .filter(|&c| is_leaf(c))
        .filter_map(|c| (0..n).find(|&p| state.fall[p].0 == c).map(|first| (first, c)))
        .collect();
    leaves.sort();
    let mut labels = vec![-1i64; n];
    let mut probs = vec![0.0; n];
    for (number, &(_, c)) in leaves.iter().enumerate() {
        let members: Vec<usize> = (0..n).filter(|&p| state.fall[p].0 == c).collect();
        let top = members.iter().map(|&p| state.fall[p].1).fold(0.0, f64::max);
        for p in members {
            labels[p] = number as i64;
            probs[p] = state.fall[p].1 / top;
        }
    }
    (labels, probs)
}
