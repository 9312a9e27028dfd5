use std::collections::BTreeMap;
use std::io::BufReader;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{ProviderKind, RunConfig};
use super::manifest::{hash_bytes, hash_file, now_ms, RunManifest, StageRecord, StageStatus};
use super::report::{ai_topics_by_year, emit_scatter, TopicCount};
use super::{PipelineError, StageName};
use crate::corpus::{self, apply_screening, ingest_metadata, read_decisions, DocumentRecord, PrismaCounts, Stage};
use crate::densclust::{self, top_members, ClusterAssignment};
use crate::embedding::{Embedder, EmbeddingMatrix};
use crate::harvest::{self, HarvestConfig, RetrievalAttempt};
use crate::llmextract::{
    extract_all, label_cluster, normalize_labels, write_extraction_csv, write_normalized_csv, ChatProvider,
    ClusterCard, ExtractionRecord, HeuristicResponder, HttpChatProvider, NormalizedRecord, TranscriptCache,
    TranscriptMode, TranscriptProvider, MAX_ABSTRACTS,
};
use crate::manifold::{project, Projection};
use crate::termstats::{
    cluster_phrases, contingency, period_label, specificity_rank, tfidf_cluster_terms, tokenize, trend_series,
    write_contingency, write_term_scores, write_trend, ContingencyMatrix, Partition, SpecUnit, TermScore,
    TrendSeries,
};

const IDENTIFIED: &str = "corpus/identified.jsonl";
const SCREENED: &str = "corpus/screened.jsonl";
const SCREEN_COUNTS: &str = "corpus/screening_counts.json";
const HARVESTED: &str = "corpus/harvested.jsonl";
const LEDGER: &str = "harvest/ledger.jsonl";
const HARVEST_PRISMA: &str = "harvest/prisma.json";
const DOCUMENTS: &str = "corpus/documents.jsonl";
const EMBEDDINGS: &str = "embed/embeddings.bin";
const EMBED_INDEX: &str = "embed/index.json";
const PROJ10: &str = "reduce/projection_cluster.csv";
const PROJ2: &str = "reduce/projection_scatter.csv";
const ASSIGNMENT: &str = "cluster/assignment.csv";
const TREE: &str = "cluster/condensed_tree.json";
const CLUSTER_TERMS: &str = "terms/cluster_terms.json";
const SPECIFICITY: &str = "terms/specificity.csv";
const CARDS: &str = "label/cluster_cards.json";
const EXTRACTION_CSV: &str = "extract/extraction.csv";
const EXTRACTION_JSON: &str = "extract/extraction.json";
const NORMALIZED_CSV: &str = "normalize/normalized.csv";
const NORMALIZED_JSON: &str = "normalize/normalized.json";
const TREND: &str = "stats/trend.json";
const TOPICS: &str = "stats/topics_by_year.json";
const CONTINGENCY: &str = "stats/contingency.json";

struct StageDef {
    name: StageName,
    inputs: &'static [&'static str],
    outputs: &'static [&'static str],
}

const DEFS: [StageDef; 13] = [
    StageDef { name: StageName::Ingest, inputs: &[], outputs: &[IDENTIFIED] },
    StageDef { name: StageName::Screen, inputs: &[IDENTIFIED], outputs: &[SCREENED, SCREEN_COUNTS] },
    StageDef { name: StageName::Harvest, inputs: &[SCREENED], outputs: &[HARVESTED, LEDGER, HARVEST_PRISMA] },
    StageDef { name: StageName::Clean, inputs: &[HARVESTED], outputs: &[DOCUMENTS] },
    StageDef { name: StageName::Embed, inputs: &[DOCUMENTS], outputs: &[EMBEDDINGS, EMBED_INDEX] },
    StageDef { name: StageName::Reduce, inputs: &[EMBEDDINGS, EMBED_INDEX], outputs: &[PROJ10, PROJ2] },
    StageDef { name: StageName::Cluster, inputs: &[PROJ10], outputs: &[ASSIGNMENT, TREE] },
    StageDef { name: StageName::Terms, inputs: &[DOCUMENTS, ASSIGNMENT], outputs: &[CLUSTER_TERMS, SPECIFICITY] },
    StageDef { name: StageName::Label, inputs: &[DOCUMENTS, ASSIGNMENT], outputs: &[CARDS] },
    StageDef { name: StageName::Extract, inputs: &[DOCUMENTS], outputs: &[EXTRACTION_CSV, EXTRACTION_JSON] },
    StageDef { name: StageName::Normalize, inputs: &[EXTRACTION_JSON], outputs: &[NORMALIZED_CSV, NORMALIZED_JSON] },
    StageDef { name: StageName::Stats, inputs: &[DOCUMENTS, NORMALIZED_JSON], outputs: &[TREND, TOPICS, CONTINGENCY] },
    StageDef {
        name: StageName::Report,
        inputs: &[PROJ2, ASSIGNMENT, CARDS, CLUSTER_TERMS, TREND, TOPICS, CONTINGENCY, HARVEST_PRISMA],
        outputs: &[
            "report/scatter.svg",
            "report/trend.csv",
            "report/ai_topics_by_year.csv",
            "report/contingency.csv",
            "report/prisma.json",
            "report/cluster_summary.csv",
        ],
    },
];

fn def(name: StageName) -> &'static StageDef {
    DEFS.iter().find(|d| d.name == name).expect("every stage has a definition")
}

fn producer(artifact: &str) -> StageName {
    DEFS.iter().find(|d| d.outputs.contains(&artifact)).map_or(StageName::Ingest, |d| d.name)
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Stages to run; empty means all.
    pub stages: Vec<StageName>,
    /// Harvest continues from its previous output instead of starting over.
    pub resume: bool,
    /// Run stages even when their inputs are unchanged.
    pub force: bool,
}

#[derive(Serialize, Deserialize)]
struct EmbedIndex {
    model_id: String,
    dim: usize,
    doc_ids: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ClusterTerms {
    cluster: usize,
    size: usize,
    terms: Vec<TermScore>,
    phrases: Vec<TermScore>,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    out: PathBuf,
    opts: &'a RunOptions,
    transcripts: Option<TranscriptCache>,
    inner: Option<Box<dyn ChatProvider>>,
}

fn json_pretty<T: Serialize>(v: &T) -> Result<Vec<u8>, PipelineError> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn doc_text(d: &DocumentRecord) -> String {
    let mut s = format!("{}. {}", d.title, d.abstract_text);
    if !d.keywords.is_empty() {
        s.push_str(". ");
        s.push_str(&d.keywords.join("; "));
    }
    s
}

fn abstract_or_title(d: &DocumentRecord) -> &str {
    if d.abstract_text.trim().is_empty() {
        &d.title
    } else {
        &d.abstract_text
    }
}

impl Ctx<'_> {
    fn path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    fn write(&self, rel: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        let p = self.path(rel);
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        }
        std::fs::write(&p, bytes).map_err(|e| PipelineError::io(&p, e))
    }

    fn read(&self, rel: &str) -> Result<Vec<u8>, PipelineError> {
        let p = self.path(rel);
        std::fs::read(&p).map_err(|e| PipelineError::io(&p, e))
    }

    fn read_json<T: for<'de> Deserialize<'de>>(&self, rel: &str) -> Result<T, PipelineError> {
        Ok(serde_json::from_slice(&self.read(rel)?)?)
    }

    fn records(&self, rel: &str) -> Result<Vec<DocumentRecord>, PipelineError> {
        Ok(corpus::load_jsonl(&self.path(rel))?)
    }

    fn save_records(&self, rel: &str, records: &[DocumentRecord]) -> Result<(), PipelineError> {
        let mut buf = Vec::new();
        corpus::write_jsonl(&mut buf, records)?;
        self.write(rel, &buf)
    }

    fn assignment(&self, docs: &[DocumentRecord]) -> Result<ClusterAssignment, PipelineError> {
        let (ids, a) = ClusterAssignment::read_csv(&self.read(ASSIGNMENT)?[..])?;
        if ids.len() != docs.len() || ids.iter().zip(docs).any(|(i, d)| *i != d.id) {
            return Err(PipelineError::Misaligned(docs.len(), ids.len()));
        }
        Ok(a)
    }

    fn with_chat<R>(&self, f: impl FnOnce(&dyn ChatProvider) -> R) -> R {
        match &self.transcripts {
            Some(cache) => {
                let p = TranscriptProvider { cache, inner: self.inner.as_deref(), mode: self.cfg.chat.mode };
                f(&p)
            }
            None => f(self.inner.as_deref().expect("validated: a provider or transcripts exist")),
        }
    }

    fn save_transcripts(&self) -> Result<(), PipelineError> {
        if let (Some(c), TranscriptMode::Record) = (&self.transcripts, self.cfg.chat.mode) {
            c.save()?;
        }
        Ok(())
    }

    fn stage_config(&self, name: StageName) -> serde_json::Value {
        let c = self.cfg;
        match name {
            StageName::Ingest | StageName::Screen | StageName::Clean => json!(null),
            StageName::Harvest => json!(HarvestConfig { workers: 0, ..c.harvest.clone() }),
            StageName::Embed => json!({"embedding": c.embedding, "seed": c.seed}),
            StageName::Reduce => json!({"cluster": c.projection, "scatter": c.scatter_projection}),
            StageName::Cluster => json!(c.cluster),
            StageName::Terms => json!(c.terms),
            StageName::Label => json!({"chat": c.chat.labeling, "provider": c.chat.provider}),
            StageName::Extract => json!({"chat": c.chat.extraction, "provider": c.chat.provider, "lcia": c.normalize.lcia.labels}),
            StageName::Normalize => json!({"chat": c.chat.extraction, "provider": c.chat.provider, "normalize": c.normalize}),
            StageName::Stats => json!({"stats": c.stats, "normalize": c.normalize, "report": c.report}),
            StageName::Report => json!(c.report),
        }
    }

    fn external_inputs(&self, name: StageName) -> Result<BTreeMap<String, String>, PipelineError> {
        let mut ext = BTreeMap::new();
        match name {
            StageName::Ingest => {
                ext.insert("corpus".to_string(), hash_file(&self.cfg.corpus)?);
            }
            StageName::Screen => {
                if let Some(d) = &self.cfg.decisions {
                    ext.insert("decisions".to_string(), hash_file(d)?);
                }
            }
            StageName::Label | StageName::Extract | StageName::Normalize => {
                if let (Some(t), TranscriptMode::Replay) = (&self.cfg.chat.transcripts, self.cfg.chat.mode) {
                    ext.insert("transcripts".to_string(), hash_file(t)?);
                }
            }
            _ => {}
        }
        Ok(ext)
    }

    fn input_hash(&self, d: &StageDef) -> Result<String, PipelineError> {
        let mut inputs = BTreeMap::new();
        for rel in d.inputs {
            let p = self.path(rel);
            if !p.is_file() {
                return Err(PipelineError::MissingDependency {
                    stage: d.name.to_string(),
                    needs: producer(rel).to_string(),
                    artifact: rel.to_string(),
                });
            }
            inputs.insert(*rel, hash_file(&p)?);
        }
        let doc = json!({
            "stage": d.name.as_str(),
            "config": self.stage_config(d.name),
            "inputs": inputs,
            "external": self.external_inputs(d.name)?,
        });
        Ok(hash_bytes(serde_json::to_string(&doc)?.as_bytes()))
    }

    fn outputs_intact(&self, rec: &StageRecord, d: &StageDef) -> bool {
        d.outputs.iter().all(|rel| {
            rec.outputs.get(*rel).is_some_and(|want| hash_file(&self.path(rel)).is_ok_and(|h| &h == want))
        })
    }

    fn execute(&self, name: StageName) -> Result<(), PipelineError> {
        match name {
            StageName::Ingest => self.ingest(),
            StageName::Screen => self.screen(),
            StageName::Harvest => self.harvest(),
            StageName::Clean => self.clean(),
            StageName::Embed => self.embed(),
            StageName::Reduce => self.reduce(),
            StageName::Cluster => self.cluster(),
            StageName::Terms => self.terms(),
            StageName::Label => self.label(),
            StageName::Extract => self.extract(),
            StageName::Normalize => self.normalize(),
            StageName::Stats => self.stats(),
            StageName::Report => self.report(),
        }
    }

    fn ingest(&self) -> Result<(), PipelineError> {
        let records = ingest_metadata(&self.cfg.corpus)?;
        log::info!("ingested {} records", records.len());
        self.save_records(IDENTIFIED, &records)
    }

    fn screen(&self) -> Result<(), PipelineError> {
        let mut records = self.records(IDENTIFIED)?;
        let decisions = match &self.cfg.decisions {
            Some(p) => read_decisions(p)?,
            None => Vec::new(),
        };
        let counts = apply_screening(&mut records, &decisions)?;
        log::info!("screening kept {} of {}", counts.screened_included, counts.identified);
        self.save_records(SCREENED, &records)?;
        self.write(SCREEN_COUNTS, &json_pretty(&counts)?)
    }

    fn harvest(&self) -> Result<(), PipelineError> {
        let resume = self.opts.resume && self.path(HARVESTED).is_file() && self.path(LEDGER).is_file();
        let (mut records, mut ledger) = if resume {
            let f = std::fs::File::open(self.path(LEDGER)).map_err(|e| PipelineError::io(self.path(LEDGER), e))?;
            (self.records(HARVESTED)?, harvest::read_ledger(BufReader::new(f))?)
        } else {
            (self.records(SCREENED)?, Vec::<RetrievalAttempt>::new())
        };
        let mut hcfg = self.cfg.harvest.clone();
        if hcfg.cache_dir.is_none() {
            hcfg.cache_dir = Some(self.cfg.cache_dir.join("harvest"));
        }
        let report = harvest::harvest_all(&mut records, &hcfg, &mut ledger)?;
        for (id, e) in &report.errors {
            log::warn!("harvest {id}: {e}");
        }
        log::info!(
            "full text for {} records ({} open access, {} publisher)",
            report.counts.fulltext_total,
            report.counts.open_access_retrieved,
            report.counts.publisher_retrieved
        );
        self.save_records(HARVESTED, &records)?;
        let mut buf = Vec::new();
        harvest::write_ledger(&mut buf, &ledger)?;
        self.write(LEDGER, &buf)?;
        self.write(HARVEST_PRISMA, &json_pretty(&report.counts)?)
    }

    fn clean(&self) -> Result<(), PipelineError> {
        let docs: Vec<DocumentRecord> = self
            .records(HARVESTED)?
            .into_iter()
            .filter(|r| r.stage == Stage::FulltextOk)
            .map(|mut r| {
                r.title = corpus::clean_abstract(&r.title);
                r.abstract_text = corpus::clean_abstract(&r.abstract_text);
                r
            })
            .collect();
        self.save_records(DOCUMENTS, &docs)
    }

    fn embed(&self) -> Result<(), PipelineError> {
        let docs = self.records(DOCUMENTS)?;
        let ids: Vec<String> = docs.iter().map(|d| d.id.clone()).collect();
        let texts: Vec<String> = docs
            .iter()
            .map(|d| {
                if self.cfg.embedding.include_title {
                    format!("{}. {}", d.title, d.abstract_text)
                } else {
                    abstract_or_title(d).to_string()
                }
            })
            .collect();
        let embedder = Embedder::from_config(&self.cfg.embedding, Some(self.cfg.cache_dir.join("embeddings")), self.cfg.seed)?;
        let m = embedder.embed_batch(&ids, &texts)?;
        let index = EmbedIndex { model_id: m.model_id.clone(), dim: m.dim, doc_ids: m.doc_ids.clone() };
        self.write(EMBEDDINGS, &m.to_bytes())?;
        self.write(EMBED_INDEX, &json_pretty(&index)?)
    }

    fn reduce(&self) -> Result<(), PipelineError> {
        let index: EmbedIndex = self.read_json(EMBED_INDEX)?;
        let m = EmbeddingMatrix::from_bytes(&index.model_id, index.doc_ids, &self.read(EMBEDDINGS)?)?;
        for (cfg, rel) in [(&self.cfg.projection, PROJ10), (&self.cfg.scatter_projection, PROJ2)] {
            let p = project(&m, cfg)?;
            if !p.clamped_points.is_empty() {
                log::warn!("{} points hit the bandwidth clamp in {rel}", p.clamped_points.len());
            }
            let mut buf = Vec::new();
            p.write_csv(&mut buf).map_err(|e| PipelineError::io(rel, e))?;
            self.write(rel, &buf)?;
        }
        Ok(())
    }

    fn projection(&self, rel: &str, cfg: &crate::manifold::ProjectionConfig) -> Result<Projection, PipelineError> {
        let text = String::from_utf8_lossy(&self.read(rel)?).into_owned();
        Ok(Projection::read_csv(&text, cfg.clone())?)
    }

    fn cluster(&self) -> Result<(), PipelineError> {
        let p = self.projection(PROJ10, &self.cfg.projection)?;
        let (tree, a) = densclust::cluster(&p.coords, &self.cfg.cluster)?;
        log::info!("{} clusters, {} noise points", a.n_clusters(), a.noise_count());
        let mut buf = Vec::new();
        a.write_csv(&p.doc_ids, &mut buf)?;
        self.write(ASSIGNMENT, &buf)?;
        let mut t = tree.to_json()?;
        t.push('\n');
        self.write(TREE, t.as_bytes())
    }

    fn terms(&self) -> Result<(), PipelineError> {
        let docs = self.records(DOCUMENTS)?;
        let a = self.assignment(&docs)?;
        let texts: Vec<String> = docs.iter().map(doc_text).collect();
        let tokens: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t)).collect();
        let text_refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let tc = &self.cfg.terms;
        let mut out = Vec::new();
        for c in 0..a.n_clusters() {
            let members = a.members(c);
            out.push(ClusterTerms {
                cluster: c,
                size: members.len(),
                terms: tfidf_cluster_terms(&members, &tokens, tc.top_n)?,
                phrases: cluster_phrases(&members, &text_refs, &tc.phrases, tc.top_n)?,
            });
        }
        self.write(CLUSTER_TERMS, &json_pretty(&out)?)?;

        let units: Vec<SpecUnit> = match tc.specificity.partition {
            Partition::Period { years } => {
                let first = docs.iter().map(|d| d.year).min().unwrap_or(0);
                docs.iter()
                    .zip(&texts)
                    .map(|(d, t)| SpecUnit { group: period_label(d.year, first, years), text: t.clone() })
                    .collect()
            }
            Partition::Field => docs
                .iter()
                .flat_map(|d| {
                    [("title", d.title.clone()), ("abstract", d.abstract_text.clone()), ("keywords", d.keywords.join("; "))]
                        .map(|(g, text)| SpecUnit { group: g.into(), text })
                })
                .collect(),
        };
        let mut buf = Vec::new();
        write_term_scores(&specificity_rank(&units, &tc.specificity), &mut buf)?;
        self.write(SPECIFICITY, &buf)
    }

    fn label(&self) -> Result<(), PipelineError> {
        let docs = self.records(DOCUMENTS)?;
        let a = self.assignment(&docs)?;
        let cards = self.with_chat(|p| -> Result<Vec<ClusterCard>, PipelineError> {
            top_members(&a, MAX_ABSTRACTS)
                .iter()
                .enumerate()
                .map(|(c, members)| {
                    let abstracts: Vec<&str> = members.iter().map(|&i| abstract_or_title(&docs[i])).collect();
                    Ok(label_cluster(p, c, &abstracts, &self.cfg.chat.labeling)?)
                })
                .collect()
        });
        self.save_transcripts()?;
        self.write(CARDS, &json_pretty(&cards?)?)
    }

    fn extract(&self) -> Result<(), PipelineError> {
        let docs: Vec<(String, String)> = self
            .records(DOCUMENTS)?
            .into_iter()
            .filter_map(|d| d.fulltext.map(|f| (d.id, f.cleaned_text)))
            .collect();
        let methods = &self.cfg.normalize.lcia.labels;
        let records = self.with_chat(|p| extract_all(p, &docs, methods, &self.cfg.chat.extraction, self.cfg.chat.workers));
        self.save_transcripts()?;
        let records = records?;
        let mut buf = Vec::new();
        write_extraction_csv(&records, &mut buf)?;
        self.write(EXTRACTION_CSV, &buf)?;
        self.write(EXTRACTION_JSON, &json_pretty(&records)?)
    }

    fn normalize(&self) -> Result<(), PipelineError> {
        let records: Vec<ExtractionRecord> = self.read_json(EXTRACTION_JSON)?;
        let out = self.with_chat(|p| {
            records
                .iter()
                .map(|r| normalize_labels(r, &self.cfg.normalize, Some(p), &self.cfg.chat.extraction))
                .collect::<Result<Vec<_>, _>>()
        });
        self.save_transcripts()?;
        let out = out?;
        let fallbacks = out.iter().filter(|r| r.fallback).count();
        if fallbacks > 0 {
            log::warn!("{fallbacks} records fell back to Other after transport failures");
        }
        let mut buf = Vec::new();
        write_normalized_csv(&out, &mut buf)?;
        self.write(NORMALIZED_CSV, &buf)?;
        self.write(NORMALIZED_JSON, &json_pretty(&out)?)
    }

    fn stats(&self) -> Result<(), PipelineError> {
        let docs = self.records(DOCUMENTS)?;
        let sc = &self.cfg.stats;
        let by_year: Vec<(i32, Vec<String>)> =
            docs.iter().map(|d| (d.year, tokenize(&format!("{} {}", d.title, d.abstract_text)))).collect();
        self.write(TREND, &json_pretty(&trend_series(&by_year, sc.trend_period_years, sc.trend_top_k)?)?)?;

        let normalized: Vec<NormalizedRecord> = self.read_json(NORMALIZED_JSON)?;
        let years: BTreeMap<&str, i32> = docs.iter().map(|d| (d.id.as_str(), d.year)).collect();
        let rows: Vec<(i32, &NormalizedRecord)> =
            normalized.iter().filter_map(|r| years.get(r.doc_id.as_str()).map(|&y| (y, r))).collect();
        let topics = ai_topics_by_year(&rows, &self.cfg.normalize, &self.cfg.report.generic_labels);
        self.write(TOPICS, &json_pretty(&topics)?)?;

        let tokens: Vec<Vec<String>> = docs.iter().map(|d| tokenize(&doc_text(d))).collect();
        let m = contingency(&tokens, &sc.term_groups[&sc.row_group], &sc.term_groups[&sc.col_group])?;
        log::info!("contingency chi2 {:.3}, p = {:.5}", m.global.statistic, m.global.p_value);
        self.write(CONTINGENCY, &json_pretty(&m)?)
    }

    fn report(&self) -> Result<(), PipelineError> {
        let (ids, a) = ClusterAssignment::read_csv(&self.read(ASSIGNMENT)?[..])?;
        let p2 = self.projection(PROJ2, &self.cfg.scatter_projection)?;
        if p2.doc_ids != ids {
            return Err(PipelineError::Misaligned(p2.doc_ids.len(), ids.len()));
        }
        let cards: Vec<ClusterCard> = self.read_json(CARDS)?;
        self.write("report/scatter.svg", emit_scatter(&p2, &a, &cards)?.as_bytes())?;

        let trend: TrendSeries = self.read_json(TREND)?;
        let mut buf = Vec::new();
        write_trend(&trend, &mut buf)?;
        self.write("report/trend.csv", &buf)?;

        let topics: Vec<TopicCount> = self.read_json(TOPICS)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["dimension", "year", "label", "count"])?;
        for t in &topics {
            w.write_record([t.dimension.clone(), t.year.to_string(), t.label.clone(), t.count.to_string()])?;
        }
        self.write("report/ai_topics_by_year.csv", &w.into_inner().map_err(|e| PipelineError::io("csv", e.into_error()))?)?;

        let m: ContingencyMatrix = self.read_json(CONTINGENCY)?;
        let mut buf = Vec::new();
        write_contingency(&m, &mut buf)?;
        self.write("report/contingency.csv", &buf)?;

        let counts: PrismaCounts = self.read_json(HARVEST_PRISMA)?;
        counts.check()?;
        self.write("report/prisma.json", &json_pretty(&counts)?)?;

        let terms: Vec<ClusterTerms> = self.read_json(CLUSTER_TERMS)?;
        let k = self.cfg.report.top_terms;
        let join = |v: &[TermScore]| v.iter().take(k).map(|t| t.term.as_str()).collect::<Vec<_>>().join("; ");
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["cluster", "size", "top_terms", "top_phrases", "title", "description", "ai_summary"])?;
        for t in &terms {
            let card = cards.iter().find(|c| c.cluster_id == t.cluster);
            w.write_record([
                t.cluster.to_string(),
                t.size.to_string(),
                join(&t.terms),
                join(&t.phrases),
                card.map_or(String::new(), |c| c.title.clone()),
                card.map_or(String::new(), |c| c.description.clone()),
                card.map_or(String::new(), |c| c.ai_summary.clone()),
            ])?;
        }
        self.write("report/cluster_summary.csv", &w.into_inner().map_err(|e| PipelineError::io("csv", e.into_error()))?)
    }
}

fn inner_provider(cfg: &RunConfig) -> Option<Box<dyn ChatProvider>> {
    match cfg.chat.provider {
        ProviderKind::Heuristic => Some(Box::new(HeuristicResponder::new())),
        ProviderKind::Http => Some(Box::new(HttpChatProvider::new(cfg.chat.extraction.timeout_secs))),
        ProviderKind::None => None,
    }
}

fn needs_chat(stages: &[StageName]) -> bool {
    stages.iter().any(|s| matches!(s, StageName::Label | StageName::Extract | StageName::Normalize))
}

/// Run `opts.stages` (all when empty) in pipeline order. The manifest is
/// written last, or as a partial manifest when a stage fails.
pub fn run(config: &RunConfig, opts: &RunOptions) -> Result<RunManifest, PipelineError> {
    let cfg = config.clone().with_seed(config.seed);
    cfg.validate()?;
    let mut stages = if opts.stages.is_empty() { StageName::ALL.to_vec() } else { opts.stages.clone() };
    stages.sort();
    stages.dedup();
    let out = cfg.output_dir.clone();
    std::fs::create_dir_all(&out).map_err(|e| PipelineError::io(&out, e))?;

    let transcripts = match (&cfg.chat.transcripts, needs_chat(&stages)) {
        (Some(t), true) => Some(TranscriptCache::open(t)?),
        _ => None,
    };
    let ctx = Ctx { cfg: &cfg, out: out.clone(), opts, transcripts, inner: inner_provider(&cfg) };
    let prior = RunManifest::load(&out)?;
    let mut manifest = RunManifest::new(serde_json::to_value(&cfg)?, cfg.seed);
    if let Some(p) = &prior {
        manifest.stages = p.stages.clone();
    }

    for name in stages {
        let d = def(name);
        let started = now_ms();
        let attempt = ctx.input_hash(d).and_then(|input_hash| {
            let unchanged = prior
                .as_ref()
                .and_then(|p| p.stage(name))
                .filter(|r| r.status != StageStatus::Failed && r.input_hash == input_hash && ctx.outputs_intact(r, d));
            if let (Some(r), false) = (unchanged, opts.force) {
                log::info!("{name}: inputs unchanged, skipped");
                return Ok(StageRecord { status: StageStatus::Skipped, started_ms: started, finished_ms: now_ms(), ..r.clone() });
            }
            log::info!("{name}: running");
            ctx.execute(name)?;
            let mut outputs = BTreeMap::new();
            for rel in d.outputs {
                outputs.insert(rel.to_string(), hash_file(&ctx.path(rel))?);
            }
            Ok(StageRecord {
                stage: name.to_string(),
                status: StageStatus::Ran,
                input_hash,
                outputs,
                started_ms: started,
                finished_ms: now_ms(),
                error: None,
            })
        });
        match attempt {
            Ok(rec) => manifest.upsert(rec),
            Err(e) => {
                manifest.upsert(StageRecord {
                    stage: name.to_string(),
                    status: StageStatus::Failed,
                    input_hash: String::new(),
                    outputs: BTreeMap::new(),
                    started_ms: started,
                    finished_ms: now_ms(),
                    error: Some(e.to_string()),
                });
                manifest.finished_ms = now_ms();
                manifest.save(&out)?;
                return Err(match e {
                    e @ PipelineError::MissingDependency { .. } => e,
                    e => PipelineError::Stage { stage: name.to_string(), source: Box::new(e) },
                });
            }
        }
    }
    manifest.complete = StageName::ALL.iter().all(|n| manifest.stage(*n).is_some_and(|r| r.status != StageStatus::Failed));
    manifest.finished_ms = now_ms();
    manifest.save(&out)?;
    Ok(manifest)
}

