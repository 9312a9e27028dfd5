use serde::{Deserialize, Serialize};

use super::{clean_fulltext, CorpusError, FullText, SourceFormat};

/// Body-like element names tried in order; the first one that yields text wins.
/// Names are compared on the local part, so `ce:sections` matches `sections`.
pub const DEFAULT_CANDIDATE_TAGS: &[&str] = &["body", "sections", "originalText", "rawtext"];

/// Elements after which a paragraph break is inserted while collecting text.
const BLOCK_TAGS: &[&str] = &[
    "p", "para", "simple-para", "title", "section-title", "sec", "section", "abstract", "caption",
    "list-item", "label", "table", "row", "entry",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct XmlExtractor {
    pub candidates: Vec<String>,
}

impl Default for XmlExtractor {
    fn default() -> Self {
        XmlExtractor {
            candidates: DEFAULT_CANDIDATE_TAGS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl XmlExtractor {
    pub fn with_extra(mut self, tags: impl IntoIterator<Item = String>) -> Self {
        self.candidates.extend(tags);
        self
    }

    pub fn extract(&self, xml: &str) -> Result<FullText, CorpusError> {
        let opts = roxmltree::ParsingOptions {
            allow_dtd: true,
            ..Default::default()
        };
        let doc = roxmltree::Document::parse_with_options(xml, opts)
            .map_err(|e| CorpusError::MalformedXml(e.to_string()))?;

        for tag in &self.candidates {
            let mut raw = String::new();
            for node in doc.descendants().filter(|n| is_tag(n, tag)) {
                // nested matches are covered by their outermost ancestor
                if node.ancestors().skip(1).any(|a| is_tag(&a, tag)) {
                    continue;
                }
                collect_text(node, &mut raw);
                raw.push_str("\n\n");
            }
            let cleaned = clean_fulltext(&raw);
            if !cleaned.is_empty() {
                return Ok(FullText {
                    source_format: SourceFormat::Xml,
                    raw_chars: raw.trim().chars().count(),
                    cleaned_text: cleaned,
                });
            }
        }
        Err(CorpusError::FulltextMissing)
    }
}

fn is_tag(node: &roxmltree::Node<'_, '_>, tag: &str) -> bool {
    node.is_element() && node.tag_name().name().eq_ignore_ascii_case(tag)
}

fn collect_text(node: roxmltree::Node<'_, '_>, out: &mut String) {
    for child in node.children() {
        if child.is_text() {
            out.push_str(child.text().unwrap_or(""));
        } else if child.is_element() {
            collect_text(child, out);
            let name = child.tag_name().name();
            if BLOCK_TAGS.iter().any(|b| b.eq_ignore_ascii_case(name)) {
                out.push_str("\n\n");
            }
        }
    }
}

/// Extract with the default candidate list.
pub fn extract_xml_fulltext(xml: &str) -> Result<FullText, CorpusError> {
    XmlExtractor::default().extract(xml)
}

/// Wrap pre-extracted plain text (for example from a PDF) as a full text.
pub fn plain_fulltext(text: &str) -> FullText {
    FullText {
        source_format: SourceFormat::Plain,
        raw_chars: text.chars().count(),
        cleaned_text: clean_fulltext(text),
    }
}
