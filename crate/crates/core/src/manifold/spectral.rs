use nalgebra::{DMatrix, SymmetricEigen};

use super::FuzzySimplicialSet;

const EIGEN_EPS: f64 = 1e-12;
const EIGEN_MAX_ITER: usize = 10_000;

/// Coordinates from the eigenvectors of the symmetric normalized Laplacian
/// `I - D^-1/2 W D^-1/2`, skipping the trivial smallest one. Returns `None`
/// when the graph is too small, has an isolated vertex, or the eigensolver
/// does not converge. Each eigenvector's sign is fixed so that its
/// largest-magnitude entry is positive.
pub fn spectral_layout(graph: &FuzzySimplicialSet, dim: usize) -> Option<Vec<Vec<f64>>> {
    let n = graph.len();
    if n < dim + 2 {
        return None;
    }
    let degree: Vec<f64> = graph.rows.iter().map(|r| r.iter().map(|&(_, w)| w).sum()).collect();
    if degree.iter().any(|&d| d <= 0.0) {
        return None;
    }
    let inv_sqrt: Vec<f64> = degree.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut lap = DMatrix::<f64>::identity(n, n);
    for (i, row) in graph.rows.iter().enumerate() {
        for &(j, w) in row {
            lap[(i, j)] -= w * inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let eig = SymmetricEigen::try_new(lap, EIGEN_EPS, EIGEN_MAX_ITER)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));

    let mut coords = vec![vec![0.0; dim]; n];
    for (c, &col) in order.iter().skip(1).take(dim).enumerate() {
        let v = eig.eigenvectors.column(col);
        let pivot = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            coords[i][c] = sign * v[i];
        }
    }
    if coords.iter().flatten().any(|x| !x.is_finite()) {
        return None;
    }
    Some(coords)
}
