//! A recorded-response corpus shaped like the review funnel: 1509 records
//! identified, 971 excluded at screening, 25 of the 538 kept lack a DOI,
//! 72 of the 513 DOIs have an open-access copy, 238 of the rest route to
//! the publisher and 137 of those are entitled.

use std::path::Path;

use litscape_core::corpus::{apply_screening, DocumentRecord, ExclusionReason, ScreeningDecision};
use litscape_core::harvest::{HarvestConfig, ProviderConfig};

pub const IDENTIFIED: usize = 1509;
pub const EXCLUDED: usize = 971;
pub const NO_DOI: usize = 25;
pub const OPEN_ACCESS: usize = 72;
pub const ROUTED: usize = 238;
pub const ENTITLED: usize = 137;

fn write(path: &Path, body: &str) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, body).unwrap();
}

/// Screened records plus recorded resolver and publisher answers under
/// `dir`; returns the records and a config pointing at the recordings.
pub fn build(dir: &Path) -> (Vec<DocumentRecord>, HarvestConfig) {
    let mut records: Vec<DocumentRecord> = (0..IDENTIFIED)
        .map(|i| DocumentRecord::new(format!("r{i:04}"), format!("Title {i}"), format!("Abstract {i}"), 2015 + (i % 9) as i32))
        .collect();
    let reasons = [ExclusionReason::DocType, ExclusionReason::Language, ExclusionReason::OffTopic];
    let decisions: Vec<ScreeningDecision> = (0..EXCLUDED)
        .map(|i| ScreeningDecision::exclude(format!("r{i:04}"), reasons[i % 3]))
        .collect();
    let kept = &mut records[EXCLUDED..];
    let (oa_dir, pub_dir) = (dir.join("oa"), dir.join("publisher"));
    for (j, r) in kept.iter_mut().enumerate().skip(NO_DOI) {
        let k = j - NO_DOI;
        let routed_block = k >= OPEN_ACCESS && k < OPEN_ACCESS + ROUTED;
        let doi = if routed_block || (k < OPEN_ACCESS && k % 5 == 0) {
            format!("10.1016/j.fix.{k:04}")
        } else {
            format!("10.1007/s{k:04}")
        };
        if k < OPEN_ACCESS {
            let file = dir.join("files").join(format!("{k:04}.txt"));
            write(&file, &format!("Open access full text of paper {k}.\nIt discusses life cycle assessment."));
            write(
                &oa_dir.join(&doi),
                &format!(r#"{{"is_oa": true, "best_oa_location": {{"url_for_pdf": "file://{}"}}}}"#, file.display()),
            );
        } else if k % 3 == 0 {
            write(&oa_dir.join(&doi), r#"{"is_oa": false, "best_oa_location": null}"#);
        }
        if routed_block {
            let body = if k - OPEN_ACCESS < ENTITLED {
                format!("<full-text-retrieval-response><originalText><body><p>Article {k} body text.</p></body></originalText></full-text-retrieval-response>")
            } else {
                format!("<full-text-retrieval-response><coredata><description>Abstract only {k}</description></coredata></full-text-retrieval-response>")
            };
            write(&pub_dir.join(&doi), &body);
        }
        r.doi = Some(doi);
    }
    apply_screening(&mut records, &decisions).unwrap();
    let cfg = HarvestConfig {
        open_access: ProviderConfig::new(format!("file://{}", oa_dir.display())),
        publisher: ProviderConfig {
            auth_token: Some("fixture".into()),
            ..ProviderConfig::new(format!("file://{}", pub_dir.display()))
        },
        workers: 8,
        ..HarvestConfig::default()
    };
    (records, cfg)
}
