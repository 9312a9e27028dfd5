use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::densclust::ClusterConfig;
use crate::embedding::EmbeddingConfig;
use crate::harvest::HarvestConfig;
use crate::llmextract::{ChatConfig, NormalizeConfig, TranscriptMode, EXTRACTION_MODEL};
use crate::manifold::ProjectionConfig;
use crate::termstats::{PhraseOptions, SpecificityConfig, TermGroups};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    /// Deterministic offline responder.
    Heuristic,
    /// OpenAI-style chat endpoint.
    Http,
    /// Answers come only from recorded transcripts.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChatSettings {
    pub provider: ProviderKind,
    pub transcripts: Option<PathBuf>,
    pub mode: TranscriptMode,
    pub labeling: ChatConfig,
    pub extraction: ChatConfig,
    pub workers: usize,
}

impl Default for ChatSettings {
    fn default() -> Self {
        ChatSettings {
            provider: ProviderKind::Http,
            transcripts: None,
            mode: TranscriptMode::Record,
            labeling: ChatConfig::labeling(),
            extraction: ChatConfig { model_id: EXTRACTION_MODEL.into(), ..ChatConfig::default() },
            workers: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TermsConfig {
    pub top_n: usize,
    pub phrases: PhraseOptions,
    pub specificity: SpecificityConfig,
}

impl Default for TermsConfig {
    fn default() -> Self {
        TermsConfig { top_n: 10, phrases: PhraseOptions::default(), specificity: SpecificityConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StatsConfig {
    pub trend_period_years: u32,
    pub trend_top_k: usize,
    /// Term group names for contingency rows and columns.
    pub row_group: String,
    pub col_group: String,
    pub term_groups: TermGroups,
}

fn default_term_groups() -> TermGroups {
    let g = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let mut m = TermGroups::new();
    m.insert(
        "ai".into(),
        g(&[
            "neural network",
            "machine learning",
            "deep learning",
            "random forest",
            "support vector machine",
            "regression",
            "reinforcement learning",
            "decision tree",
            "language model",
        ]),
    );
    m.insert(
        "lca".into(),
        g(&[
            "life cycle inventory",
            "impact assessment",
            "carbon emissions",
            "global warming potential",
            "energy consumption",
            "water use",
            "embodied carbon",
        ]),
    );
    m
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            trend_period_years: 4,
            trend_top_k: 10,
            row_group: "ai".into(),
            col_group: "lca".into(),
            term_groups: default_term_groups(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportConfig {
    /// AI labels too generic to stand alone; reported as Other.
    pub generic_labels: Vec<String>,
    pub top_terms: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            generic_labels: ["Machine Learning (ML)", "Machine Learning", "Artificial Intelligence", "Data Engineering"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            top_terms: 5,
        }
    }
}

/// Everything a run needs. Relative paths are taken from the directory of
/// the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub decisions: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub seed: u64,
    pub harvest: HarvestConfig,
    pub embedding: EmbeddingConfig,
    /// Projection used for clustering.
    pub projection: ProjectionConfig,
    /// Projection used for the scatter plot.
    pub scatter_projection: ProjectionConfig,
    pub cluster: ClusterConfig,
    pub terms: TermsConfig,
    pub chat: ChatSettings,
    pub normalize: NormalizeConfig,
    pub stats: StatsConfig,
    pub report: ReportConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: PathBuf::from("metadata.csv"),
            decisions: None,
            output_dir: PathBuf::from("out"),
            cache_dir: PathBuf::from("cache"),
            seed: 42,
            harvest: HarvestConfig::default(),
            embedding: EmbeddingConfig::default(),
            projection: ProjectionConfig::default(),
            scatter_projection: ProjectionConfig { n_components: 2, min_dist: 0.1, ..ProjectionConfig::default() },
            cluster: ClusterConfig::default(),
            terms: TermsConfig::default(),
            chat: ChatSettings::default(),
            normalize: NormalizeConfig::default(),
            stats: StatsConfig::default(),
            report: ReportConfig::default(),
        }
    }
}

fn merge(into: &mut serde_json::Value, from: serde_json::Value) {
    match (into, from) {
        (serde_json::Value::Object(a), serde_json::Value::Object(b)) => {
            for (k, v) in b {
                merge(a.entry(k).or_insert(serde_json::Value::Null), v);
            }
        }
        (slot, v) => *slot = v,
    }
}

fn rebase(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn rebase_url(base: &Path, url: &str) -> String {
    match url.strip_prefix("file://") {
        Some(rest) if !rest.starts_with('/') => format!("file://{}", base.join(rest).display()),
        _ => url.to_string(),
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Read and rebase relative paths onto the file's directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        Self::load_with_overlay(path, None)
    }

    /// Like `load`, with the objects of `overlay` (typically provider
    /// endpoints and tokens) merged key by key over the config before
    /// parsing. Relative paths resolve against the config's directory.
    pub fn load_with_overlay(path: &Path, overlay: Option<&Path>) -> Result<Self, PipelineError> {
        let read = |p: &Path| -> Result<serde_json::Value, PipelineError> {
            let text = std::fs::read_to_string(p).map_err(|e| PipelineError::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", p.display())))
        };
        let mut doc = read(path)?;
        if let Some(o) = overlay {
            merge(&mut doc, read(o)?);
        }
        let mut cfg: RunConfig = serde_json::from_value(doc).map_err(|e| PipelineError::Config(e.to_string()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.rebase(&base);
        Ok(cfg)
    }

    pub fn rebase(&mut self, base: &Path) {
        self.corpus = rebase(base, &self.corpus);
        self.decisions = self.decisions.as_ref().map(|d| rebase(base, d));
        self.output_dir = rebase(base, &self.output_dir);
        self.cache_dir = rebase(base, &self.cache_dir);
        self.chat.transcripts = self.chat.transcripts.as_ref().map(|t| rebase(base, t));
        self.harvest.cache_dir = self.harvest.cache_dir.as_ref().map(|d| rebase(base, d));
        self.harvest.open_access.base_url = rebase_url(base, &self.harvest.open_access.base_url);
        self.harvest.publisher.base_url = rebase_url(base, &self.harvest.publisher.base_url);
    }

    /// Apply the global seed to every seeded component.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.projection.seed = seed;
        self.scatter_projection.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if !self.corpus.is_file() {
            return bad(format!("corpus file {} does not exist", self.corpus.display()));
        }
        if let Some(d) = &self.decisions {
            if !d.is_file() {
                return bad(format!("decisions file {} does not exist", d.display()));
            }
        }
        if self.chat.mode == TranscriptMode::Replay {
            match &self.chat.transcripts {
                Some(t) if t.is_file() => {}
                Some(t) => return bad(format!("transcript file {} does not exist", t.display())),
                None => return bad("replay mode needs a transcripts file".into()),
            }
        }
        if self.chat.provider == ProviderKind::None && self.chat.transcripts.is_none() {
            return bad("chat provider none needs a transcripts file".into());
        }
        if self.scatter_projection.n_components != 2 {
            return bad(format!("scatter projection must have 2 components, got {}", self.scatter_projection.n_components));
        }
        if !self.stats.term_groups.contains_key(&self.stats.row_group) {
            return bad(format!("term group {:?} is not defined", self.stats.row_group));
        }
        if !self.stats.term_groups.contains_key(&self.stats.col_group) {
            return bad(format!("term group {:?} is not defined", self.stats.col_group));
        }
        self.harvest.validate()?;
        self.cluster.validate()?;
        self.chat.labeling.validate()?;
        self.chat.extraction.validate()?;
        self.normalize.validate()?;
        Ok(())
    }
}
