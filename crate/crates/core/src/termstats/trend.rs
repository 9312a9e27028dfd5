use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::TermStatsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub period: String,
    pub term: String,
    pub count: u64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendSeries {
    pub periods: Vec<String>,
    pub terms: Vec<String>,
    /// Period-major, terms in `terms` order within a period.
    pub rows: Vec<TrendRow>,
}

impl TrendSeries {
    pub fn heights<'a>(&'a self, period: &'a str) -> impl Iterator<Item = &'a TrendRow> + 'a {
        self.rows.iter().filter(move |r| r.period == period)
    }
}

/// Bin documents into `period_years` windows anchored at the earliest year,
/// keep the `top_k` terms by total occurrences (ties alphabetical), and
/// normalize their counts to sum to 1 within each non-empty period. Empty
/// periods are emitted with zero heights.
pub fn trend_series(docs: &[(i32, Vec<String>)], period_years: u32, top_k: usize) -> Result<TrendSeries, TermStatsError> {
    if period_years == 0 {
        return Err(TermStatsError::InvalidPeriod);
    }
    let Some(first) = docs.iter().map(|d| d.0).min() else {
        return Ok(TrendSeries { periods: Vec::new(), terms: Vec::new(), rows: Vec::new() });
    };
    let last = docs.iter().map(|d| d.0).max().unwrap_or(first);
    let width = period_years as i32;
    let n_bins = ((last - first) / width + 1) as usize;
    let bin = |y: i32| ((y - first) / width) as usize;

    let mut totals: BTreeMap<&str, u64> = BTreeMap::new();
    for (_, toks) in docs {
        for t in toks {
            *totals.entry(t).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, u64)> = totals.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let terms: Vec<String> = ranked.iter().take(top_k).map(|(t, _)| t.to_string()).collect();
    let index: BTreeMap<&str, usize> = terms.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();

    let mut counts = vec![vec![0u64; terms.len()]; n_bins];
    for (year, toks) in docs {
        for t in toks {
            if let Some(&k) = index.get(t.as_str()) {
                counts[bin(*year)][k] += 1;
            }
        }
    }
    let periods: Vec<String> = (0..n_bins)
        .map(|b| {
            let start = first + b as i32 * width;
            format!("{}-{}", start, start + width - 1)
        })
        .collect();
    let mut rows = Vec::with_capacity(n_bins * terms.len());
    for (b, period) in periods.iter().enumerate() {
        let total: u64 = counts[b].iter().sum();
        for (k, term) in terms.iter().enumerate() {
            let count = counts[b][k];
            let height = if total > 0 { count as f64 / total as f64 } else { 0.0 };
            rows.push(TrendRow { period: period.clone(), term: term.clone(), count, height });
        }
    }
    Ok(TrendSeries { periods, terms, rows })
}
