/// Bumped whenever a template's wording changes.
pub const TEMPLATE_VERSION: &str = "v1";

pub const CLUSTER_LABEL: &str = include_str!("../../templates/cluster_label.v1.txt");
pub const EXTRACT_FIELDS: &str = include_str!("../../templates/extract_fields.v1.txt");
pub const LCA_PRIMER: &str = include_str!("../../templates/lca_primer.v1.txt");
pub const NORMALIZE_LABEL: &str = include_str!("../../templates/normalize_label.v1.txt");
pub const CORRECTION: &str = include_str!("../../templates/correction.v1.txt");

pub const EXCERPT_CHARS: usize = 12_000;

/// Replace every `{{name}}` placeholder.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{{{k}}}}}"), v);
    }
    out
}

/// At most `limit` characters; a cut inside a word moves back to the
/// preceding whitespace. Text with no whitespace before the limit is cut
/// hard.
pub fn truncate_at_whitespace(text: &str, limit: usize) -> &str {
    let Some((cut, _)) = text.char_indices().nth(limit) else {
        return text;
    };
    if text[cut..].starts_with(char::is_whitespace) {
        return text[..cut].trim_end();
    }
    match text[..cut].rfind(char::is_whitespace) {
        Some(ws) => text[..ws].trim_end(),
        None => &text[..cut],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_snaps_back() {
        assert_eq!(truncate_at_whitespace("alpha beta gamma", 8), "alpha");
        assert_eq!(truncate_at_whitespace("alpha beta gamma", 10), "alpha beta");
        assert_eq!(truncate_at_whitespace("alpha beta", 50), "alpha beta");
        assert_eq!(truncate_at_whitespace("abcdefgh", 3), "abc");
        assert_eq!(truncate_at_whitespace("éé éé", 4), "éé");
        let long = "word ".repeat(5000);
        let t = truncate_at_whitespace(&long, EXCERPT_CHARS);
        assert!(t.chars().count() <= EXCERPT_CHARS);
        assert!(t.ends_with("word"));
    }

    #[test]
    fn templates_have_their_placeholders() {
        assert!(CLUSTER_LABEL.contains("{{abstracts}}") && CLUSTER_LABEL.contains("exactly three lines"));
        assert!(EXTRACT_FIELDS.contains("{{excerpt}}") && EXTRACT_FIELDS.contains("exactly seven lines"));
        assert!(LCA_PRIMER.contains("{{lcia_methods}}"));
        assert_eq!(render("a {{x}} b {{x}}", &[("x", "1")]), "a 1 b 1");
    }
}
