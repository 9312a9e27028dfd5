use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::chi2::chi_square_2x2;
use super::tfidf::{phrase_occurrences, PhraseOptions, TermScore};
use super::tokenize::tokenize;

/// One counting unit (a document, or one field of a document) and the
/// partition group it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecUnit {
    pub group: String,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "by")]
pub enum Partition {
    Period { years: u32 },
    Field,
}

impl Default for Partition {
    fn default() -> Self {
        Partition::Period { years: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpecificityConfig {
    pub max_terms: usize,
    pub min_frequency: u64,
    pub partition: Partition,
    pub phrases: PhraseOptions,
}

impl Default for SpecificityConfig {
    fn default() -> Self {
        SpecificityConfig {
            max_terms: 500,
            min_frequency: 2,
            partition: Partition::default(),
            phrases: PhraseOptions::default(),
        }
    }
}

/// Label of the `years`-wide window, anchored at `first`, containing `year`.
pub fn period_label(year: i32, first: i32, years: u32) -> String {
    let y = years.max(1) as i32;
    let start = first + (year - first).div_euclid(y) * y;
    format!("{}-{}", start, start + y - 1)
}

/// Candidate terms of a unit: single tokens plus phrases.
fn unit_terms(text: &str, phrases: &PhraseOptions) -> BTreeSet<String> {
    tokenize(text).into_iter().chain(phrase_occurrences(text, phrases)).collect()
}

/// For every candidate term, the largest 2x2 χ² of term presence against
/// membership of one partition group versus the rest. Ranked by χ², then
/// unit frequency, then alphabetically; `frequency` counts units.
pub fn specificity_rank(units: &[SpecUnit], cfg: &SpecificityConfig) -> Vec<TermScore> {
    let n = units.len() as u64;
    let mut group_size: BTreeMap<&str, u64> = BTreeMap::new();
    let mut by_term: BTreeMap<String, BTreeMap<&str, u64>> = BTreeMap::new();
    for u in units {
        *group_size.entry(&u.group).or_default() += 1;
        for t in unit_terms(&u.text, &cfg.phrases) {
            *by_term.entry(t).or_default().entry(&u.group).or_default() += 1;
        }
    }
    let mut out: Vec<TermScore> = by_term
        .into_iter()
        .filter_map(|(term, per_group)| {
            let freq: u64 = per_group.values().sum();
            if freq < cfg.min_frequency {
                return None;
            }
            let score = group_size
                .iter()
                .map(|(g, &size)| {
                    let a = per_group.get(g).copied().unwrap_or(0);
                    chi_square_2x2(a, freq - a, size - a, n - size - (freq - a)).statistic
                })
                .fold(0.0, f64::max);
            Some(TermScore { term, score, frequency: freq })
        })
        .collect();
    out.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(b.frequency.cmp(&a.frequency))
            .then_with(|| a.term.cmp(&b.term))
    });
    out.truncate(cfg.max_terms);
    out
}
