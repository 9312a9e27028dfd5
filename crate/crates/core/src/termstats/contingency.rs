use serde::{Deserialize, Serialize};

use super::chi2::{chi_square, chi_square_2x2, ChiSquare};
use super::tokenize::tokenize;
use super::TermStatsError;

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

/// True when the tokenized `term` occurs as a contiguous run in `doc`.
pub fn contains_term(doc: &[String], term: &[String]) -> bool {
    !term.is_empty() && doc.windows(term.len()).any(|w| w == term)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub observed: Vec<Vec<u64>>,
    pub expected: Vec<Vec<f64>>,
    pub deviation: Vec<Vec<f64>>,
    pub p_values: Vec<Vec<f64>>,
    pub significant: Vec<Vec<bool>>,
    pub global: ChiSquare,
    /// Terms without any co-occurrence, removed before the test.
    pub dropped_rows: Vec<String>,
    pub dropped_cols: Vec<String>,
}

impl ContingencyMatrix {
    pub fn total(&self) -> u64 {
        self.observed.iter().flatten().sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.observed.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.cols.len()).map(|j| self.observed.iter().map(|r| r[j]).sum()).collect()
    }
}

/// `(O - E) / E` with `E = row * col / N`.
pub fn deviation(o: u64, row: u64, col: u64, n: u64) -> (f64, f64) {
    let e = row as f64 * col as f64 / n as f64;
    (e, (o as f64 - e) / e)
}

/// Document co-occurrence between two term groups. `O[i][j]` counts the
/// documents containing both terms; every cell is also tested on its own
/// 2x2 table against the rest of the matrix.
pub fn contingency(docs: &[Vec<String>], rows: &[String], cols: &[String]) -> Result<ContingencyMatrix, TermStatsError> {
    if rows.is_empty() || cols.is_empty() {
        return Err(TermStatsError::EmptyGroup);
    }
    let presence = |terms: &[String]| -> Vec<Vec<bool>> {
        terms
            .iter()
            .map(|t| {
                let toks = tokenize(t);
                docs.iter().map(|d| contains_term(d, &toks)).collect()
            })
            .collect()
    };
    let (pr, pc) = (presence(rows), presence(cols));
    let raw: Vec<Vec<u64>> = pr
        .iter()
        .map(|a| pc.iter().map(|b| a.iter().zip(b).filter(|(x, y)| **x && **y).count() as u64).collect())
        .collect();

    let keep_r: Vec<usize> = (0..rows.len()).filter(|&i| raw[i].iter().any(|&v| v > 0)).collect();
    let keep_c: Vec<usize> = (0..cols.len()).filter(|&j| raw.iter().any(|r| r[j] > 0)).collect();
    let dropped_rows: Vec<String> = (0..rows.len()).filter(|i| !keep_r.contains(i)).map(|i| rows[i].clone()).collect();
    let dropped_cols: Vec<String> = (0..cols.len()).filter(|j| !keep_c.contains(j)).map(|j| cols[j].clone()).collect();
    for t in dropped_rows.iter().chain(&dropped_cols) {
        log::warn!("term {t:?} has no co-occurrences and is dropped from the contingency matrix");
    }
    if keep_r.is_empty() || keep_c.is_empty() {
        return Err(TermStatsError::NoCooccurrence);
    }
    let observed: Vec<Vec<u64>> = keep_r.iter().map(|&i| keep_c.iter().map(|&j| raw[i][j]).collect()).collect();
    let global = chi_square(&observed)?;

    let row_sum: Vec<u64> = observed.iter().map(|r| r.iter().sum()).collect();
    let col_sum: Vec<u64> = (0..keep_c.len()).map(|j| observed.iter().map(|r| r[j]).sum()).collect();
    let n: u64 = row_sum.iter().sum();
    let (r, c) = (keep_r.len(), keep_c.len());
    let mut m = ContingencyMatrix {
        rows: keep_r.iter().map(|&i| rows[i].clone()).collect(),
        cols: keep_c.iter().map(|&j| cols[j].clone()).collect(),
        observed,
        expected: vec![vec![0.0; c]; r],
        deviation: vec![vec![0.0; c]; r],
        p_values: vec![vec![1.0; c]; r],
        significant: vec![vec![false; c]; r],
        global,
        dropped_rows,
        dropped_cols,
    };
    for i in 0..r {
        for j in 0..c {
            let o = m.observed[i][j];
            let (e, d) = deviation(o, row_sum[i], col_sum[j], n);
            m.expected[i][j] = e;
            m.deviation[i][j] = d;
            let cell = chi_square_2x2(o, row_sum[i] - o, col_sum[j] - o, n + o - row_sum[i] - col_sum[j]);
            m.p_values[i][j] = cell.p_value;
            m.significant[i][j] = cell.p_value < SIGNIFICANCE_LEVEL;
        }
    }
    Ok(m)
}
