use std::collections::HashSet;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::client::{ProviderClient, ResponseCache};
use super::{route_publisher, HarvestConfig, HarvestError, Outcome, PayloadKind, RetrievalAttempt};
use crate::corpus::{plain_fulltext, CorpusError, DocumentRecord, FullText, PrismaCounts, Provider, Stage, XmlExtractor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarvestReport {
    pub counts: PrismaCounts,
    /// Records sent to the providers in this run.
    pub attempted: usize,
    /// Records skipped because they already had full text.
    pub skipped: usize,
    /// `(doc_id, message)` for records whose attempts hit transport or
    /// server errors.
    pub errors: Vec<(String, String)>,
}

#[derive(Deserialize)]
struct OaLocation {
    url_for_pdf: Option<String>,
    url: Option<String>,
}

#[derive(Deserialize)]
struct OaResponse {
    best_oa_location: Option<OaLocation>,
}

struct RecordResult {
    attempts: Vec<RetrievalAttempt>,
    text: Option<(FullText, Provider)>,
}

fn status_error(status: u16, body: &str) -> HarvestError {
    match status {
        401 => HarvestError::Auth(status),
        403 => HarvestError::Paywalled,
        404 => HarvestError::NotFound,
        _ => HarvestError::Http { status, message: body.chars().take(200).collect() },
    }
}

pub struct Harvester {
    cfg: HarvestConfig,
    open_access: ProviderClient,
    publisher: ProviderClient,
    extractor: XmlExtractor,
}

impl Harvester {
    pub fn new(cfg: &HarvestConfig) -> Result<Self, HarvestError> {
        cfg.validate()?;
        let cache = cfg.cache_dir.as_ref().map(ResponseCache::new);
        Ok(Harvester {
            open_access: ProviderClient::new("open_access", cfg.open_access.clone(), cfg.attempts, cfg.backoff_secs)?
                .with_cache(cache.clone()),
            publisher: ProviderClient::new("publisher", cfg.publisher.clone(), cfg.attempts, cfg.backoff_secs)?
                .with_cache(cache),
            extractor: XmlExtractor::default(),
            cfg: cfg.clone(),
        })
    }

    pub fn with_extractor(mut self, extractor: XmlExtractor) -> Self {
        self.extractor = extractor;
        self
    }

    /// Best open-access location for `doi`, or `None` when the resolver
    /// knows the DOI but reports no free copy.
    pub fn resolve_open_access(&self, doi: &str) -> Result<Option<String>, HarvestError> {
        let base = self.open_access.cfg.base_url.trim_end_matches('/');
        let mut url = format!("{base}/{}", doi.trim());
        if let (Some(email), false) = (&self.cfg.email, base.starts_with("file://")) {
            url.push_str(&format!("?email={email}"));
        }
        let f = self.open_access.get(&url, &[("Accept", "application/json")], doi)?;
        if f.status != 200 {
            return Err(status_error(f.status, &f.body));
        }
        let r: OaResponse = serde_json::from_str(&f.body).map_err(|e| HarvestError::Malformed(e.to_string()))?;
        Ok(r.best_oa_location.and_then(|l| l.url_for_pdf.or(l.url)).filter(|u| !u.is_empty()))
    }

    /// Download an open-access copy. Only text payloads are accepted: XML
    /// goes through the body extractor, anything else is taken as text
    /// already extracted from the PDF. A relative `file://` location is
    /// resolved against a `file://` resolver directory.
    pub fn download_open_access(&self, url: &str) -> Result<FullText, HarvestError> {
        let base = self.open_access.cfg.base_url.trim_end_matches('/');
        let url = match (url.strip_prefix("file://"), base.starts_with("file://")) {
            (Some(rest), true) if !rest.starts_with('/') => format!("{base}/{rest}"),
            _ => url.to_string(),
        };
        let url = url.as_str();
        let f = self.open_access.get(url, &[], url)?;
        if f.status != 200 {
            return Err(status_error(f.status, &f.body));
        }
        let body = f.body.trim_start_matches('\u{feff}');
        if body.starts_with("%PDF") {
            return Err(HarvestError::Unsupported("binary PDF".into()));
        }
        let text = if body.trim_start().starts_with('<') {
            self.extractor.extract(body)?
        } else {
            plain_fulltext(body)
        };
        if text.cleaned_text.is_empty() {
            return Err(HarvestError::Corpus(CorpusError::FulltextMissing));
        }
        Ok(text)
    }

    /// Raw XML article from the publisher API.
    pub fn fetch_publisher_fulltext(&self, doi: &str) -> Result<String, HarvestError> {
        let token = self.publisher.cfg.token().ok_or(HarvestError::MissingToken)?;
        let base = self.publisher.cfg.base_url.trim_end_matches('/');
        let url = format!("{base}/{}", doi.trim());
        let f = self.publisher.get(&url, &[("X-ELS-APIKey", &token), ("Accept", "text/xml")], doi)?;
        if f.status != 200 {
            return Err(status_error(f.status, &f.body));
        }
        Ok(f.body)
    }

    fn open_access_route(&self, id: &str, doi: &str, log: &mut Vec<RetrievalAttempt>) -> Option<FullText> {
        let url = match self.resolve_open_access(doi) {
            Ok(Some(url)) => url,
            Ok(None) => {
                log.push(RetrievalAttempt::failed(id, Provider::OpenAccess, &HarvestError::Paywalled));
                return None;
            }
            Err(e) => {
                log.push(RetrievalAttempt::failed(id, Provider::OpenAccess, &e));
                return None;
            }
        };
        match self.download_open_access(&url) {
            Ok(t) => {
                log.push(RetrievalAttempt::ok(id, Provider::OpenAccess, PayloadKind::PdfUrl));
                Some(t)
            }
            Err(e) => {
                let mut a = RetrievalAttempt::failed(id, Provider::OpenAccess, &e);
                a.outcome = Outcome::HttpError;
                a.detail = Some(format!("download {url}: {e}"));
                log.push(a);
                None
            }
        }
    }

    fn publisher_route(&self, id: &str, doi: &str, log: &mut Vec<RetrievalAttempt>) -> Option<FullText> {
        let r = self.fetch_publisher_fulltext(doi).and_then(|xml| match self.extractor.extract(&xml) {
            Ok(t) => Ok(t),
            // abstract-only answers carry no body
            Err(CorpusError::FulltextMissing) => Err(HarvestError::Paywalled),
            Err(e) => Err(HarvestError::Malformed(e.to_string())),
        });
        match r {
            Ok(t) => {
                log.push(RetrievalAttempt::ok(id, Provider::Publisher, PayloadKind::Xml));
                Some(t)
            }
            Err(e) => {
                log.push(RetrievalAttempt::failed(id, Provider::Publisher, &e));
                None
            }
        }
    }

    fn process(&self, rec: &DocumentRecord) -> RecordResult {
        let mut attempts = Vec::new();
        let Some(doi) = rec.doi.as_deref().filter(|_| rec.has_doi()) else {
            return RecordResult { attempts: vec![RetrievalAttempt::no_doi(&rec.id)], text: None };
        };
        let mut text = self.open_access_route(&rec.id, doi, &mut attempts).map(|t| (t, Provider::OpenAccess));
        if text.is_none() && route_publisher(doi, &self.cfg.publisher_prefixes) {
            text = self.publisher_route(&rec.id, doi, &mut attempts).map(|t| (t, Provider::Publisher));
        }
        RecordResult { attempts, text }
    }

    /// Retrieve full text for every included record that lacks it. Attempts
    /// for the processed records replace their earlier entries in `ledger`.
    /// Records end sorted by id.
    pub fn run(
        &self,
        records: &mut [DocumentRecord],
        ledger: &mut Vec<RetrievalAttempt>,
    ) -> Result<HarvestReport, HarvestError> {
        let pending: Vec<usize> = (0..records.len())
            .filter(|&i| records[i].stage.is_included() && records[i].stage != Stage::FulltextOk)
            .collect();
        let skipped = records.iter().filter(|r| r.stage == Stage::FulltextOk).count();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.cfg.workers.max(1))
            .build()
            .map_err(|e| HarvestError::InvalidConfig(e.to_string()))?;
        let results: Vec<RecordResult> =
            pool.install(|| pending.par_iter().map(|&i| self.process(&records[i])).collect());

        let processed: HashSet<String> = pending.iter().map(|&i| records[i].id.clone()).collect();
        ledger.retain(|a| !processed.contains(&a.doc_id));
        let mut errors = Vec::new();
        for (&i, r) in pending.iter().zip(results) {
            let rec = &mut records[i];
            match r.text {
                Some((t, via)) => rec.attach_fulltext(t, via)?,
                None => rec.advance(Stage::FulltextMissing)?,
            }
            for a in &r.attempts {
                if a.outcome == Outcome::HttpError {
                    errors.push((rec.id.clone(), a.detail.clone().unwrap_or_default()));
                }
            }
            ledger.extend(r.attempts);
        }
        ledger.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        records.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(HarvestReport { counts: PrismaCounts::from_records(records)?, attempted: pending.len(), skipped, errors })
    }
}

pub fn harvest_all(
    records: &mut [DocumentRecord],
    cfg: &HarvestConfig,
    ledger: &mut Vec<RetrievalAttempt>,
) -> Result<HarvestReport, HarvestError> {
    Harvester::new(cfg)?.run(records, ledger)
}

pub fn write_ledger<W: Write>(mut out: W, ledger: &[RetrievalAttempt]) -> Result<(), HarvestError> {
    for a in ledger {
        serde_json::to_writer(&mut out, a)?;
        out.write_all(b"\n").map_err(|e| HarvestError::Io { path: "<ledger>".into(), source: e })?;
    }
    Ok(())
}

pub fn read_ledger<R: BufRead>(input: R) -> Result<Vec<RetrievalAttempt>, HarvestError> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line.map_err(|e| HarvestError::Io { path: "<ledger>".into(), source: e })?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}
