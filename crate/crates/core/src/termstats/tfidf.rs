use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::tokenize::{is_stopword, segments};
use super::TermStatsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermScore {
    pub term: String,
    pub score: f64,
    pub frequency: u64,
}

/// Dense term ids in alphabetical order with document frequencies.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vocabulary {
    pub terms: Vec<String>,
    pub ids: HashMap<String, usize>,
    pub doc_freq: Vec<usize>,
    pub n_docs: usize,
}

impl Vocabulary {
    pub fn build(docs: &[Vec<String>]) -> Self {
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in docs {
            let mut seen: Vec<&str> = doc.iter().map(String::as_str).filter(|t| !is_stopword(t)).collect();
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                *df.entry(t).or_default() += 1;
            }
        }
        let terms: Vec<String> = df.keys().map(|t| t.to_string()).collect();
        let ids = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary { terms, ids, doc_freq: df.into_values().collect(), n_docs: docs.len() }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `ln((1 + N) / (1 + df)) + 1`.
    pub fn idf(&self, id: usize) -> f64 {
        ((1.0 + self.n_docs as f64) / (1.0 + self.doc_freq[id] as f64)).ln() + 1.0
    }
}

/// Correctly rounded sum (Shewchuk's non-overlapping partials), so the
/// result does not depend on summation order.
pub fn exact_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for mut x in values {
        let mut kept = 0;
        for i in 0..partials.len() {
            let mut y = partials[i];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        partials.truncate(kept);
        partials.push(x);
    }
    // round the expansion back to one double, top-down
    let Some(mut hi) = partials.pop() else {
        return 0.0;
    };
    let mut lo = 0.0;
    while let Some(y) = partials.pop() {
        let x = hi;
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != 0.0 {
            break;
        }
    }
    if lo != 0.0 {
        if let Some(&next) = partials.last() {
            if (lo < 0.0) == (next < 0.0) {
                let y = lo * 2.0;
                let x = hi + y;
                if y == x - hi {
                    hi = x;
                }
            }
        }
    }
    hi
}

/// Mean over the cluster documents of `count / doc_length * idf`, top
/// `top_n` by score with ties broken alphabetically. `frequency` is the
/// term's total count inside the cluster.
pub fn tfidf_cluster_terms(
    cluster: &[usize],
    corpus: &[Vec<String>],
    top_n: usize,
) -> Result<Vec<TermScore>, TermStatsError> {
    if cluster.is_empty() {
        return Err(TermStatsError::EmptyCluster);
    }
    if let Some(&bad) = cluster.iter().find(|&&i| i >= corpus.len()) {
        return Err(TermStatsError::DocOutOfRange(bad));
    }
    let vocab = Vocabulary::build(corpus);
    let mut tf_parts: Vec<Vec<f64>> = vec![Vec::new(); vocab.len()];
    let mut freq = vec![0u64; vocab.len()];
    for &d in cluster {
        let doc = &corpus[d];
        let len = doc.len() as f64;
        let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
        for t in doc {
            if let Some(&id) = vocab.ids.get(t) {
                *counts.entry(id).or_default() += 1;
            }
        }
        for (id, c) in counts {
            tf_parts[id].push(c as f64 / len);
            freq[id] += c;
        }
    }
    let m = cluster.len() as f64;
    let mut scores: Vec<TermScore> = (0..vocab.len())
        .filter(|&id| freq[id] > 0)
        .map(|id| TermScore {
            term: vocab.terms[id].clone(),
            score: exact_sum(tf_parts[id].iter().copied()) * vocab.idf(id) / m,
            frequency: freq[id],
        })
        .collect();
    scores.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.term.cmp(&b.term)));
    scores.truncate(top_n);
    Ok(scores)
}

/// Phrases dropped as domain-generic.
pub const GENERIC_PHRASES: &[&str] = &[
    "life cycle",
    "cycle assessment",
    "life cycle assessment",
    "life cycle assessments",
    "life cycle analysis",
    "cycle analysis",
    "life cycle assessment lca",
    "cycle assessment lca",
    "lca study",
    "lca studies",
    "lca results",
    "case study",
    "case studies",
    "environmental impact",
    "environmental impacts",
    "environmental assessment",
    "proposed method",
    "proposed approach",
    "proposed model",
    "recent years",
    "literature review",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhraseOptions {
    pub min_len: usize,
    pub max_len: usize,
    pub blocklist: Vec<String>,
}

impl Default for PhraseOptions {
    fn default() -> Self {
        PhraseOptions {
            min_len: 2,
            max_len: 4,
            blocklist: GENERIC_PHRASES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhraseCandidate {
    pub phrase: String,
    pub count: u64,
    pub doc_freq: u64,
}

fn boundary_ok(w: &str) -> bool {
    w.chars().count() > 1 && !is_stopword(w)
}

/// Every n-gram occurrence in `text`, `min_len..=max_len` words long, that
/// stays inside one punctuation-free segment, starts and ends on a
/// non-stopword of two or more characters, and is not blocklisted.
pub fn phrase_occurrences(text: &str, opts: &PhraseOptions) -> Vec<String> {
    let mut out = Vec::new();
    for seg in segments(text) {
        for start in 0..seg.len() {
            if !boundary_ok(&seg[start]) {
                continue;
            }
            for len in opts.min_len.max(1)..=opts.max_len {
                let end = start + len;
                if end > seg.len() {
                    break;
                }
                if !boundary_ok(&seg[end - 1]) {
                    continue;
                }
                let phrase = seg[start..end].join(" ");
                if !opts.blocklist.contains(&phrase) {
                    out.push(phrase);
                }
            }
        }
    }
    out
}

/// Candidates aggregated over `texts`, most frequent first, ties alphabetical.
pub fn extract_phrases(texts: &[&str], opts: &PhraseOptions) -> Vec<PhraseCandidate> {
    let mut agg: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for text in texts {
        let mut occ = phrase_occurrences(text, opts);
        for p in &occ {
            agg.entry(p.clone()).or_default().0 += 1;
        }
        occ.sort_unstable();
        occ.dedup();
        for p in occ {
            agg.entry(p).or_default().1 += 1;
        }
    }
    let mut out: Vec<PhraseCandidate> = agg
        .into_iter()
        .map(|(phrase, (count, doc_freq))| PhraseCandidate { phrase, count, doc_freq })
        .collect();
    out.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.phrase.cmp(&b.phrase)));
    out
}

/// Phrases of the cluster documents ranked by TF-IDF, where each document is
/// its list of phrase occurrences and the corpus is every text.
pub fn cluster_phrases(
    cluster: &[usize],
    texts: &[&str],
    opts: &PhraseOptions,
    top_n: usize,
) -> Result<Vec<TermScore>, TermStatsError> {
    let docs: Vec<Vec<String>> = texts.iter().map(|t| phrase_occurrences(t, opts)).collect();
    tfidf_cluster_terms(cluster, &docs, top_n)
}
