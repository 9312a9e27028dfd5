//! Term statistics: TF-IDF keywords, phrases, χ² specificity, co-occurrence
//! contingency and period trends.

mod chi2;
mod contingency;
mod specificity;
mod tfidf;
mod tokenize;
mod trend;

use std::collections::BTreeMap;
use std::io::Write;

use thiserror::Error;

pub use chi2::{chi2_sf, chi_square, chi_square_2x2, gamma_q, ln_gamma, ChiSquare};
pub use contingency::{contains_term, contingency, deviation, ContingencyMatrix, SIGNIFICANCE_LEVEL};
pub use specificity::{period_label, specificity_rank, Partition, SpecUnit, SpecificityConfig};
pub use tfidf::{
    cluster_phrases, extract_phrases, phrase_occurrences, tfidf_cluster_terms, PhraseCandidate, PhraseOptions,
    TermScore, Vocabulary, GENERIC_PHRASES,
};
pub use tokenize::{is_stopword, segments, tokenize, STOPWORDS};
pub use trend::{trend_series, TrendRow, TrendSeries};

#[derive(Debug, Error)]
pub enum TermStatsError {
    #[error("cluster has no documents")]
    EmptyCluster,
    #[error("document index {0} out of range")]
    DocOutOfRange(usize),
    #[error("contingency table is empty")]
    EmptyTable,
    #[error("contingency table rows differ in length")]
    RaggedTable,
    #[error("degenerate margin: {0}")]
    DegenerateMargin(String),
    #[error("term group is empty")]
    EmptyGroup,
    #[error("no term pair co-occurs in any document")]
    NoCooccurrence,
    #[error("period length must be positive")]
    InvalidPeriod,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Term groups such as `{"ai": ["neural network", ...], "lca": [...]}`.
pub type TermGroups = BTreeMap<String, Vec<String>>;

pub fn read_term_groups(json: &str) -> Result<TermGroups, TermStatsError> {
    Ok(serde_json::from_str(json)?)
}

/// `term,frequency,score`.
pub fn write_term_scores<W: Write>(scores: &[TermScore], out: W) -> Result<(), TermStatsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["term", "frequency", "score"])?;
    for s in scores {
        w.write_record([s.term.clone(), s.frequency.to_string(), s.score.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// One line per cell: `row,col,observed,expected,deviation,p_value,significant`.
pub fn write_contingency<W: Write>(m: &ContingencyMatrix, out: W) -> Result<(), TermStatsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["row", "col", "observed", "expected", "deviation", "p_value", "significant"])?;
    for (i, r) in m.rows.iter().enumerate() {
        for (j, c) in m.cols.iter().enumerate() {
            w.write_record([
                r.clone(),
                c.clone(),
                m.observed[i][j].to_string(),
                m.expected[i][j].to_string(),
                m.deviation[i][j].to_string(),
                m.p_values[i][j].to_string(),
                m.significant[i][j].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `period,term,count,height`.
pub fn write_trend<W: Write>(t: &TrendSeries, out: W) -> Result<(), TermStatsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["period", "term", "count", "height"])?;
    for r in &t.rows {
        w.write_record([r.period.clone(), r.term.clone(), r.count.to_string(), r.height.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
