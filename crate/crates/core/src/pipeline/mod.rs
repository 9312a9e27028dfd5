//! Stage orchestration, run manifests and report emission.
//!
//! Stages run in a fixed order and each declares the artifacts it reads
//! from its predecessors. A stage whose input hash matches the previous
//! manifest and whose outputs are intact is skipped.

mod config;
pub mod fixture;
mod manifest;
mod report;
mod stages;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::corpus::CorpusError;
use crate::densclust::ClusterError;
use crate::embedding::EmbeddingError;
use crate::harvest::HarvestError;
use crate::llmextract::LlmError;
use crate::manifold::ManifoldError;
use crate::termstats::TermStatsError;

pub use config::{ChatSettings, ProviderKind, ReportConfig, RunConfig, StatsConfig, TermsConfig};
pub use manifest::{hash_bytes, hash_file, verify_manifest, RunManifest, StageRecord, StageStatus, MANIFEST_FILE};
pub use report::{ai_topics_by_year, emit_scatter, group_generic, TopicCount, PALETTE};
pub use stages::{run, RunOptions};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("stage {stage:?} needs {artifact}; run {needs:?} first")]
    MissingDependency { stage: String, needs: String, artifact: String },
    #[error("projection has {0} components; the scatter needs 2")]
    DimensionMismatch(usize),
    #[error("{0} documents but {1} cluster labels")]
    Misaligned(usize, usize),
    #[error("stage {stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<PipelineError>,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Harvest(#[from] HarvestError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Terms(#[from] TermStatsError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Broad failure classes, one process exit code each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Io,
    Dependency,
    Provider,
    Parse,
    Other,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Other => 1,
            ErrorClass::Config => 2,
            ErrorClass::Io => 3,
            ErrorClass::Dependency => 4,
            ErrorClass::Provider => 5,
            ErrorClass::Parse => 6,
        }
    }
}

impl PipelineError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        PipelineError::Io { path: path.as_ref().display().to_string(), source }
    }

    pub fn class(&self) -> ErrorClass {
        use ErrorClass::*;
        match self {
            PipelineError::Config(_) => Config,
            PipelineError::Io { .. } => Io,
            PipelineError::MissingDependency { .. } => Dependency,
            PipelineError::Stage { source, .. } => source.class(),
            PipelineError::Corpus(e) => match e {
                CorpusError::Io { .. } => Io,
                CorpusError::Csv(_) | CorpusError::Json(_) | CorpusError::MissingColumns(_) | CorpusError::InvalidYear { .. } => {
                    Parse
                }
                CorpusError::MalformedXml(_) => Parse,
                _ => Other,
            },
            PipelineError::Harvest(e) => match e {
                HarvestError::Io { .. } => Io,
                HarvestError::InvalidConfig(_) | HarvestError::MissingToken => Config,
                HarvestError::Json(_) => Parse,
                _ => Provider,
            },
            PipelineError::Embedding(e) => match e {
                EmbeddingError::Http(_) | EmbeddingError::Malformed(_) => Provider,
                EmbeddingError::Cache { .. } => Io,
                _ => Other,
            },
            PipelineError::Manifold(ManifoldError::InvalidConfig(_)) => Config,
            PipelineError::Cluster(ClusterError::InvalidConfig(_)) => Config,
            PipelineError::Llm(e) => match e {
                LlmError::Transport(_) | LlmError::Protocol(_) | LlmError::TranscriptMiss { .. } => Provider,
                LlmError::Parse { .. } | LlmError::Json(_) | LlmError::Csv(_) | LlmError::Transcript { .. } => Parse,
                LlmError::InvalidConfig(_) | LlmError::ContextBudget { .. } => Config,
                _ => Other,
            },
            PipelineError::Json(_) | PipelineError::Csv(_) => Parse,
            _ => Other,
        }
    }
}

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StageName {
    Ingest,
    Screen,
    Harvest,
    Clean,
    Embed,
    Reduce,
    Cluster,
    Terms,
    Label,
    Extract,
    Normalize,
    Stats,
    Report,
}

impl StageName {
    pub const ALL: [StageName; 13] = [
        StageName::Ingest,
        StageName::Screen,
        StageName::Harvest,
        StageName::Clean,
        StageName::Embed,
        StageName::Reduce,
        StageName::Cluster,
        StageName::Terms,
        StageName::Label,
        StageName::Extract,
        StageName::Normalize,
        StageName::Stats,
        StageName::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StageName::Ingest => "ingest",
            StageName::Screen => "screen",
            StageName::Harvest => "harvest",
            StageName::Clean => "clean",
            StageName::Embed => "embed",
            StageName::Reduce => "reduce",
            StageName::Cluster => "cluster",
            StageName::Terms => "terms",
            StageName::Label => "label",
            StageName::Extract => "extract",
            StageName::Normalize => "normalize",
            StageName::Stats => "stats",
            StageName::Report => "report",
        }
    }
}

impl fmt::Display for StageName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StageName {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StageName::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| PipelineError::Config(format!("unknown stage {s:?}")))
    }
}
