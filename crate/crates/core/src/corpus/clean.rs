use std::sync::LazyLock;

use regex::Regex;

/// Punctuation that survives cleaning, besides letters, digits and spaces.
pub const ALLOWED_PUNCTUATION: &str = ".,;:()-%";

/// Identifier patterns stripped from full texts, applied in order.
pub const REMOVAL_PATTERNS: &[(&str, &str)] = &[
    ("doi_url", r"(?i)\bhttps?://(?:dx\.)?doi\.org/\S+"),
    ("url", r"(?i)\b(?:https?://|ftp://|www\.)\S+"),
    ("email", r"[\w.+-]+@[\w-]+(?:\.[\w-]+)+"),
    ("doi", r"(?i)\b(?:doi:\s*)?10\.\d{4,9}/\S+"),
];

static REMOVALS: LazyLock<Vec<Regex>> = LazyLock::new(|| {
    REMOVAL_PATTERNS
        .iter()
        .map(|(_, p)| Regex::new(p).expect("removal pattern compiles"))
        .collect()
});

// letter, hyphen, optional trailing blanks, line break, optional leading blanks, letter
static HYPHEN_BREAK: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(\p{L})-[ \t]*\r?\n[ \t]*(\p{L})").unwrap());

fn allowed(c: char) -> bool {
    c.is_alphanumeric() || ALLOWED_PUNCTUATION.contains(c)
}

/// Strip disallowed characters, turn every whitespace run (line breaks
/// included) into a single space and trim the ends.
pub fn clean_abstract(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars() {
        if c.is_whitespace() {
            pending_space = true;
        } else if allowed(c) {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        }
    }
    out
}

fn clean_fulltext_once(text: &str) -> String {
    let joined = HYPHEN_BREAK.replace_all(text, "$1$2");
    let mut stripped = joined.into_owned();
    for re in REMOVALS.iter() {
        stripped = re.replace_all(&stripped, " ").into_owned();
    }
    clean_abstract(&stripped)
}

/// Full-text cleaning: hyphenated line breaks are rejoined, URLs, emails
/// and DOIs removed, then the abstract rules apply.
///
/// Character filtering can expose a new identifier (`www★.x` becomes
/// `www.x`), so the pass repeats until the text stops changing. Each pass
/// never grows the text, so this terminates.
pub fn clean_fulltext(text: &str) -> String {
    let mut current = clean_fulltext_once(text);
    loop {
        let next = clean_fulltext_once(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn abstract_examples() {
        assert_eq!(clean_abstract(""), "");
        assert_eq!(clean_abstract("LCA\n\nmodel  ★ test"), "LCA model test");
        assert_eq!(clean_abstract("a  b\tc"), "a b c");
        assert_eq!(clean_abstract("  (CO2-eq) 45%; done.  "), "(CO2-eq) 45%; done.");
    }

    #[test]
    fn abstract_keeps_hyphen_within_line() {
        assert_eq!(clean_abstract("life-cycle"), "life-cycle");
    }

    #[test]
    fn fulltext_examples() {
        assert_eq!(clean_fulltext("see https://x.y and a@b.c"), "see and");
        assert_eq!(clean_fulltext("environ-\nmental"), "environmental");
        assert_eq!(clean_fulltext(""), "");
    }

    #[test]
    fn fulltext_removes_dois() {
        assert_eq!(
            clean_fulltext("cited as doi:10.1016/j.jclepro.2020.1 in text"),
            "cited as in text"
        );
        assert_eq!(clean_fulltext("https://doi.org/10.1000/xyz ok"), "ok");
    }

    #[test]
    fn hyphen_rejoin_needs_a_line_break() {
        assert_eq!(clean_fulltext("data-driven\nmodel"), "data-driven model");
        assert_eq!(clean_fulltext("data-\n  driven"), "datadriven");
    }

    #[test]
    fn filtering_that_exposes_a_url_is_still_idempotent() {
        let once = clean_fulltext("go www★.example.org now");
        assert_eq!(clean_fulltext(&once), once);
        assert_eq!(once, "go now");
    }

    proptest! {
        #[test]
        fn abstract_idempotent(s in "\\PC{0,80}") {
            let once = clean_abstract(&s);
            prop_assert_eq!(clean_abstract(&once), once);
        }

        #[test]
        fn fulltext_idempotent(s in "(\\PC|\n|-|@|/|www\\.|https://|10\\.1234/){0,40}") {
            let once = clean_fulltext(&s);
            prop_assert_eq!(clean_fulltext(&once), once);
        }

        #[test]
        fn output_stays_in_allowed_set(s in "\\PC{0,80}") {
            for text in [clean_abstract(&s), clean_fulltext(&s)] {
                prop_assert!(text.chars().all(|c| c == ' ' || allowed(c)));
                prop_assert!(!text.contains("  "));
                prop_assert!(!text.contains('@') && !text.contains("://"));
            }
        }
    }
}
