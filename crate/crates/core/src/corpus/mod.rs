//! Document records, the screening funnel and text preparation.
//!
//! A corpus moves through a one-way funnel:
//!
//! ```text
//! identified -> screened_in | screened_out -> fulltext_missing -> fulltext_ok
//! ```
//!
//! `screened_out` is terminal. Every mutation of a record goes through
//! [`DocumentRecord::advance`], which rejects backward moves.

mod clean;
mod ingest;
mod screening;
mod xml;

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use clean::{clean_abstract, clean_fulltext, ALLOWED_PUNCTUATION, REMOVAL_PATTERNS};
pub use ingest::{ingest_metadata, ingest_metadata_from_reader, COLUMN_ALIASES};
pub use screening::{apply_screening, read_decisions, PrismaCounts, ScreeningDecision, Verdict};
pub use xml::{extract_xml_fulltext, plain_fulltext, XmlExtractor, DEFAULT_CANDIDATE_TAGS};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing mandatory column(s): {}", .0.join(", "))]
    MissingColumns(Vec<String>),
    #[error("duplicate document id {0:?}")]
    DuplicateId(String),
    #[error("row {row}: year {value:?} is not an integer in [1900, 2100]")]
    InvalidYear { row: usize, value: String },
    #[error("screening decision references unknown id {0:?}")]
    UnknownId(String),
    #[error("record {id}: cannot move from {from} to {to}")]
    BackwardTransition { id: String, from: Stage, to: Stage },
    #[error("malformed xml: {0}")]
    MalformedXml(String),
    #[error("no candidate body tag matched; full text missing")]
    FulltextMissing,
    #[error("prisma ledger inconsistent: {0}")]
    Ledger(String),
}

impl CorpusError {
    pub(crate) fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

/// Position of a record in the screening funnel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Identified,
    ScreenedIn,
    ScreenedOut,
    FulltextMissing,
    FulltextOk,
}

impl Stage {
    fn rank(self) -> u8 {
        match self {
            Stage::Identified => 0,
            Stage::ScreenedIn | Stage::ScreenedOut => 1,
            Stage::FulltextMissing => 2,
            Stage::FulltextOk => 3,
        }
    }

    /// Whether `self -> next` is a legal funnel move. Staying put is legal.
    pub fn can_advance_to(self, next: Stage) -> bool {
        if self == next {
            return true;
        }
        match (self, next) {
            (Stage::ScreenedOut, _) => false,
            // a screened_in record not yet harvested may still be excluded
            (Stage::ScreenedIn, Stage::ScreenedOut) => true,
            (_, Stage::ScreenedOut) => self == Stage::Identified,
            (Stage::Identified, Stage::FulltextMissing | Stage::FulltextOk) => false,
            _ => next.rank() > self.rank(),
        }
    }

    /// Records that survived screening, whatever their retrieval state.
    pub fn is_included(self) -> bool {
        matches!(
            self,
            Stage::ScreenedIn | Stage::FulltextMissing | Stage::FulltextOk
        )
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Identified => "identified",
            Stage::ScreenedIn => "screened_in",
            Stage::ScreenedOut => "screened_out",
            Stage::FulltextMissing => "fulltext_missing",
            Stage::FulltextOk => "fulltext_ok",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    DocType,
    Language,
    OffTopic,
    NoAbstract,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceFormat {
    Xml,
    Plain,
}

/// Which retrieval route produced a record's full text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provider {
    OpenAccess,
    Publisher,
}

impl fmt::Display for Provider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provider::OpenAccess => "open_access",
            Provider::Publisher => "publisher",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullText {
    pub source_format: SourceFormat,
    pub raw_chars: usize,
    pub cleaned_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub id: String,
    pub doi: Option<String>,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub keywords: Vec<String>,
    pub year: i32,
    pub venue: String,
    pub stage: Stage,
    /// Set at ingest when the row is excludable without reading it (blank abstract).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<ExclusionReason>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclusion: Option<ExclusionReason>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retrieved_via: Option<Provider>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fulltext: Option<FullText>,
}

impl DocumentRecord {
    pub fn new(id: impl Into<String>, title: impl Into<String>, abstract_text: impl Into<String>, year: i32) -> Self {
        DocumentRecord {
            id: id.into(),
            doi: None,
            title: title.into(),
            abstract_text: abstract_text.into(),
            keywords: Vec::new(),
            year,
            venue: String::new(),
            stage: Stage::Identified,
            flag: None,
            exclusion: None,
            retrieved_via: None,
            fulltext: None,
        }
    }

    pub fn advance(&mut self, next: Stage) -> Result<(), CorpusError> {
        if !self.stage.can_advance_to(next) {
            return Err(CorpusError::BackwardTransition {
                id: self.id.clone(),
                from: self.stage,
                to: next,
            });
        }
        self.stage = next;
        Ok(())
    }

    /// Attach retrieved text; moves the record to `fulltext_ok`.
    pub fn attach_fulltext(&mut self, text: FullText, via: Provider) -> Result<(), CorpusError> {
        self.advance(Stage::FulltextOk)?;
        self.fulltext = Some(text);
        self.retrieved_via = Some(via);
        Ok(())
    }

    pub fn has_doi(&self) -> bool {
        self.doi.as_deref().is_some_and(|d| !d.trim().is_empty())
    }
}

/// Write records as JSON lines, one record per line.
pub fn write_jsonl<W: Write>(mut out: W, records: &[DocumentRecord]) -> Result<(), CorpusError> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n").map_err(|e| CorpusError::io("<jsonl>", e))?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<DocumentRecord>, CorpusError> {
    let mut records = Vec::new();
    for line in input.lines() {
        let line = line.map_err(|e| CorpusError::io("<jsonl>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line)?);
    }
    Ok(records)
}

pub fn save_jsonl(path: &Path, records: &[DocumentRecord]) -> Result<(), CorpusError> {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, records)?;
    std::fs::write(path, buf).map_err(|e| CorpusError::io(path, e))
}

pub fn load_jsonl(path: &Path) -> Result<Vec<DocumentRecord>, CorpusError> {
    let f = std::fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
    read_jsonl(std::io::BufReader::new(f))
}
