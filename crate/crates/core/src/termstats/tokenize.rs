use std::collections::HashSet;
use std::sync::LazyLock;

/// English function words plus a handful of abstract boilerplate words.
pub const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "also", "am", "among", "an", "and",
    "any", "are", "as", "at", "be", "because", "been", "before", "being", "below", "between",
    "both", "but", "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each",
    "either", "et", "etc", "few", "for", "from", "further", "had", "has", "have", "having", "he",
    "her", "here", "hers", "herself", "him", "himself", "his", "how", "however", "i", "if", "in",
    "into", "is", "it", "its", "itself", "just", "may", "me", "might", "more", "most", "much",
    "must", "my", "myself", "no", "nor", "not", "now", "of", "off", "on", "once", "only", "or",
    "other", "our", "ours", "ourselves", "out", "over", "own", "per", "same", "she", "should",
    "since", "so", "some", "such", "than", "that", "the", "their", "theirs", "them", "themselves",
    "then", "there", "these", "they", "this", "those", "through", "thus", "to", "too", "under",
    "until", "up", "upon", "us", "using", "very", "via", "was", "we", "were", "what", "when",
    "where", "whether", "which", "while", "who", "whom", "why", "will", "with", "within",
    "without", "would", "yet", "you", "your", "yours", "yourself", "yourselves", "used", "use",
    "based", "paper", "study", "results", "show", "shows", "found", "present", "presents",
];

static STOPSET: LazyLock<HashSet<&'static str>> = LazyLock::new(|| STOPWORDS.iter().copied().collect());

pub fn is_stopword(token: &str) -> bool {
    STOPSET.contains(token)
}

fn word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '-'
}

/// Lowercased raw words: maximal runs of alphanumerics and inner hyphens.
fn raw_words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !word_char(c))
        .map(|w| w.trim_matches('-'))
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
}

/// Lowercase, split on non-alphanumerics (keeping inner hyphens), drop
/// single-character tokens and stopwords.
pub fn tokenize(text: &str) -> Vec<String> {
    raw_words(text)
        .filter(|w| w.chars().count() > 1 && !is_stopword(w))
        .collect()
}

/// Split text into punctuation-free segments of lowercased words. Stopwords
/// are kept so callers can test phrase boundaries; any character that is
/// neither a word character nor whitespace ends a segment.
pub fn segments(text: &str) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for chunk in text.split(|c: char| !(word_char(c) || c.is_whitespace())) {
        let words: Vec<String> = raw_words(chunk).collect();
        if !words.is_empty() {
            out.push(words);
        }
    }
    out
}
