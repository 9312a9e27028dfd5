#![allow(dead_code)]

pub mod chi2_oracle;
pub mod fuzz;
pub mod hdbscan_oracle;
pub mod prisma_fixture;

use litscape_core::manifold::rng::LayoutRng;

/// Small random 2-d point sets; a third of them sit on an integer grid so
/// that tied distances are common.
pub fn random_points(rng: &mut LayoutRng, n: usize) -> Vec<Vec<f64>> {
    let grid = rng.index(3) == 0;
    (0..n)
        .map(|_| {
            if grid {
                vec![rng.index(4) as f64, rng.index(4) as f64]
            } else {
                vec![rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)]
            }
        })
        .collect()
}

/// Random `r x c` count table (2..=6 each way) with no empty margin. Half
/// of the tables are drawn near independence so p-values spread over (0, 1).
pub fn random_table(rng: &mut LayoutRng) -> Vec<Vec<u64>> {
    loop {
        let (r, c) = (2 + rng.index(5), 2 + rng.index(5));
        let near_independent = rng.index(2) == 0;
        let rw: Vec<u64> = (0..r).map(|_| 1 + rng.index(6) as u64).collect();
        let cw: Vec<u64> = (0..c).map(|_| 1 + rng.index(6) as u64).collect();
        let t: Vec<Vec<u64>> = (0..r)
            .map(|i| {
                (0..c)
                    .map(|j| if near_independent { rw[i] * cw[j] + rng.index(3) as u64 } else { rng.index(25) as u64 })
                    .collect()
            })
            .collect();
        let rows_ok = t.iter().all(|row| row.iter().sum::<u64>() > 0);
        let cols_ok = (0..c).all(|j| t.iter().map(|row| row[j]).sum::<u64>() > 0);
        if rows_ok && cols_ok {
            return t;
        }
    }
}
