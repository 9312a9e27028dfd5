use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CorpusError, DocumentRecord, ExclusionReason, Provider, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Include,
    Exclude,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScreeningDecision {
    pub doc_id: String,
    pub verdict: Verdict,
    #[serde(default)]
    pub reason: Option<ExclusionReason>,
}

impl ScreeningDecision {
    pub fn include(id: impl Into<String>) -> Self {
        ScreeningDecision {
            doc_id: id.into(),
            verdict: Verdict::Include,
            reason: None,
        }
    }

    pub fn exclude(id: impl Into<String>, reason: ExclusionReason) -> Self {
        ScreeningDecision {
            doc_id: id.into(),
            verdict: Verdict::Exclude,
            reason: Some(reason),
        }
    }
}

/// Read decisions from a CSV with columns `doc_id,verdict,reason`.
/// An exclusion without a reason is recorded as `other`.
pub fn read_decisions(path: &Path) -> Result<Vec<ScreeningDecision>, CorpusError> {
    let file = std::fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let mut out = Vec::new();
    for row in reader.deserialize() {
        let mut d: ScreeningDecision = row?;
        if d.verdict == Verdict::Exclude && d.reason.is_none() {
            d.reason = Some(ExclusionReason::Other);
        }
        out.push(d);
    }
    Ok(out)
}

/// Funnel counts in the shape of a PRISMA flow diagram.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrismaCounts {
    pub identified: usize,
    pub screened_included: usize,
    pub with_doi: usize,
    pub open_access_retrieved: usize,
    pub publisher_retrieved: usize,
    pub fulltext_total: usize,
}

impl PrismaCounts {
    pub fn from_records(records: &[DocumentRecord]) -> Result<Self, CorpusError> {
        let included = records.iter().filter(|r| r.stage != Stage::ScreenedOut);
        let mut counts = PrismaCounts {
            identified: records.len(),
            ..Default::default()
        };
        for r in included {
            counts.screened_included += 1;
            if r.has_doi() {
                counts.with_doi += 1;
            }
            if r.stage == Stage::FulltextOk {
                match r.retrieved_via {
                    Some(Provider::OpenAccess) => counts.open_access_retrieved += 1,
                    Some(Provider::Publisher) => counts.publisher_retrieved += 1,
                    None => {
                        return Err(CorpusError::Ledger(format!(
                            "record {} has full text but no retrieval provider",
                            r.id
                        )))
                    }
                }
            }
        }
        counts.fulltext_total = counts.open_access_retrieved + counts.publisher_retrieved;
        counts.check()?;
        Ok(counts)
    }

    pub fn check(&self) -> Result<(), CorpusError> {
        if self.fulltext_total != self.open_access_retrieved + self.publisher_retrieved {
            return Err(CorpusError::Ledger(format!(
                "fulltext_total {} != open_access {} + publisher {}",
                self.fulltext_total, self.open_access_retrieved, self.publisher_retrieved
            )));
        }
        if !(self.identified >= self.screened_included
            && self.screened_included >= self.with_doi
            && self.with_doi >= self.fulltext_total)
        {
            return Err(CorpusError::Ledger(format!("funnel not monotone: {self:?}")));
        }
        Ok(())
    }
}

/// Apply screening decisions. Records without a decision that are still
/// `identified` are included. All ids are validated before anything changes.
pub fn apply_screening(
    records: &mut [DocumentRecord],
    decisions: &[ScreeningDecision],
) -> Result<PrismaCounts, CorpusError> {
    let index: HashMap<&str, usize> = records
        .iter()
        .enumerate()
        .map(|(i, r)| (r.id.as_str(), i))
        .collect();
    let mut planned: Vec<(usize, Stage, Option<ExclusionReason>)> = Vec::with_capacity(decisions.len());
    for d in decisions {
        let &i = index
            .get(d.doc_id.as_str())
            .ok_or_else(|| CorpusError::UnknownId(d.doc_id.clone()))?;
        let (next, reason) = match d.verdict {
            Verdict::Include => (Stage::ScreenedIn, None),
            Verdict::Exclude => (Stage::ScreenedOut, Some(d.reason.unwrap_or(ExclusionReason::Other))),
        };
        let current = records[i].stage;
        // re-including an already harvested record is a no-op, not a regression
        let target = if next == Stage::ScreenedIn && current.is_included() {
            current
        } else {
            next
        };
        if !current.can_advance_to(target) {
            return Err(CorpusError::BackwardTransition {
                id: d.doc_id.clone(),
                from: current,
                to: target,
            });
        }
        planned.push((i, target, reason));
    }

    let mut decided = vec![false; records.len()];
    for (i, target, reason) in planned {
        records[i].advance(target)?;
        if reason.is_some() {
            records[i].exclusion = reason;
        }
        decided[i] = true;
    }
    for (r, seen) in records.iter_mut().zip(decided) {
        if !seen && r.stage == Stage::Identified {
            r.advance(Stage::ScreenedIn)?;
        }
    }
    PrismaCounts::from_records(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(n: usize) -> Vec<DocumentRecord> {
        (0..n)
            .map(|i| DocumentRecord::new(format!("r{i}"), "t", "a", 2020))
            .collect()
    }

    #[test]
    fn five_records_two_excludes() {
        let mut recs = corpus(5);
        let decisions = vec![
            ScreeningDecision::exclude("r1", ExclusionReason::DocType),
            ScreeningDecision::exclude("r3", ExclusionReason::Language),
        ];
        let counts = apply_screening(&mut recs, &decisions).unwrap();
        assert_eq!(counts.screened_included, 3);
        assert_eq!(recs.iter().filter(|r| r.stage == Stage::ScreenedIn).count(), 3);
        assert_eq!(recs[1].exclusion, Some(ExclusionReason::DocType));
        assert_eq!(recs[3].exclusion, Some(ExclusionReason::Language));
    }

    #[test]
    fn zero_decisions_leave_counts_unchanged() {
        let mut recs = corpus(4);
        let before = PrismaCounts::from_records(&recs).unwrap();
        let after = apply_screening(&mut recs, &[]).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn paper_scale_screening() {
        let mut recs = corpus(1509);
        let decisions: Vec<_> = (0..971)
            .map(|i| ScreeningDecision::exclude(format!("r{i}"), ExclusionReason::OffTopic))
            .collect();
        let counts = apply_screening(&mut recs, &decisions).unwrap();
        assert_eq!(counts.identified, 1509);
        assert_eq!(counts.screened_included, 538);
    }

    #[test]
    fn reapplication_is_idempotent() {
        let mut recs = corpus(6);
        let decisions = vec![
            ScreeningDecision::exclude("r0", ExclusionReason::NoAbstract),
            ScreeningDecision::include("r2"),
        ];
        let first = apply_screening(&mut recs, &decisions).unwrap();
        let snapshot = recs.clone();
        let second = apply_screening(&mut recs, &decisions).unwrap();
        assert_eq!(first, second);
        assert_eq!(snapshot, recs);
    }

    #[test]
    fn unknown_id_rejected_without_side_effects() {
        let mut recs = corpus(2);
        let decisions = vec![
            ScreeningDecision::exclude("r0", ExclusionReason::Other),
            ScreeningDecision::include("nope"),
        ];
        assert!(matches!(
            apply_screening(&mut recs, &decisions),
            Err(CorpusError::UnknownId(id)) if id == "nope"
        ));
        assert!(recs.iter().all(|r| r.stage == Stage::Identified));
    }

    #[test]
    fn cannot_reinclude_an_exclusion() {
        let mut recs = corpus(1);
        apply_screening(&mut recs, &[ScreeningDecision::exclude("r0", ExclusionReason::Other)]).unwrap();
        let err = apply_screening(&mut recs, &[ScreeningDecision::include("r0")]).unwrap_err();
        assert!(matches!(err, CorpusError::BackwardTransition { .. }));
    }

    #[test]
    fn ledger_identity_checked() {
        let bad = PrismaCounts {
            identified: 10,
            screened_included: 8,
            with_doi: 8,
            open_access_retrieved: 2,
            publisher_retrieved: 3,
            fulltext_total: 6,
        };
        assert!(bad.check().is_err());
    }
}
