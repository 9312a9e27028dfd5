mod support;

use std::collections::BTreeMap;
use std::time::Duration;

use litscape_core::corpus::{DocumentRecord, PrismaCounts, Provider, Stage};
use litscape_core::harvest::{
    harvest_all, HarvestConfig, HarvestError, Harvester, Outcome, ProviderConfig, RetrievalAttempt,
};
use litscape_core::stub::{StubFixtures, StubServer};

use support::prisma_fixture;

fn article(body: &str) -> String {
    format!("<article><body><sec><p>{body}</p></sec></body></article>")
}

/// Ten DOIs: four open access, three entitled at the publisher, three closed
/// everywhere (two routed but not entitled, one outside the routed prefix).
fn ten_record_fixture() -> (StubFixtures, Vec<DocumentRecord>) {
    let mut fx = StubFixtures { token: "t0k".into(), ..Default::default() };
    let mut recs = Vec::new();
    for i in 0..10 {
        let doi = if i < 4 || i == 9 { format!("10.5555/oa{i}") } else { format!("10.1016/j.p.{i}") };
        if i < 4 {
            fx.open_access.insert(doi.clone(), Some(format!("oa{i}.txt")));
            fx.files.insert(format!("oa{i}.txt"), format!("Open text {i} about wind turbines."));
        } else {
            fx.open_access.insert(doi.clone(), None);
        }
        match i {
            4..=6 => {
                fx.publisher.insert(doi.clone(), Some(article(&format!("Publisher text {i}"))));
            }
            7 | 8 => {
                fx.publisher.insert(doi.clone(), None);
            }
            _ => {}
        }
        let mut r = DocumentRecord::new(format!("d{i}"), "t", "a", 2020);
        r.doi = Some(doi);
        r.stage = Stage::ScreenedIn;
        recs.push(r);
    }
    let mut bare = DocumentRecord::new("d10", "t", "a", 2020);
    bare.stage = Stage::ScreenedIn;
    recs.push(bare);
    (fx, recs)
}

fn stub_config(server: &StubServer, token: &str) -> HarvestConfig {
    HarvestConfig {
        open_access: ProviderConfig { rate_limit: 200.0, ..ProviderConfig::new(format!("{}/oa", server.base_url())) },
        publisher: ProviderConfig {
            auth_token: Some(token.into()),
            rate_limit: 200.0,
            ..ProviderConfig::new(format!("{}/publisher", server.base_url()))
        },
        backoff_secs: 0.01,
        ..HarvestConfig::default()
    }
}

#[test]
fn provider_calls_against_stub() {
    let (fx, _) = ten_record_fixture();
    let server = StubServer::start(fx).unwrap();
    let h = Harvester::new(&stub_config(&server, "t0k")).unwrap();
    let url = h.resolve_open_access("10.5555/oa0").unwrap().unwrap();
    assert!(url.ends_with("/files/oa0.txt"));
    assert_eq!(h.download_open_access(&url).unwrap().cleaned_text, "Open text 0 about wind turbines.");
    assert_eq!(h.resolve_open_access("10.1016/j.p.5").unwrap(), None);
    assert!(matches!(h.resolve_open_access("10.9/unknown"), Err(HarvestError::NotFound)));
    assert!(h.fetch_publisher_fulltext("10.1016/j.p.5").unwrap().contains("Publisher text 5"));
    assert!(matches!(h.fetch_publisher_fulltext("10.1016/j.p.7"), Err(HarvestError::Paywalled)));

    let bad = Harvester::new(&stub_config(&server, "wrong")).unwrap();
    assert!(matches!(bad.fetch_publisher_fulltext("10.1016/j.p.5"), Err(HarvestError::Auth(401))));
}

#[test]
fn ten_record_funnel() {
    let (fx, mut recs) = ten_record_fixture();
    let server = StubServer::start(fx).unwrap();
    let mut ledger = Vec::new();
    let report = harvest_all(&mut recs, &stub_config(&server, "t0k"), &mut ledger).unwrap();
    assert_eq!(report.counts.open_access_retrieved, 4);
    assert_eq!(report.counts.publisher_retrieved, 3);
    assert_eq!(report.counts.fulltext_total, 7);
    assert!(report.errors.is_empty(), "{:?}", report.errors);

    let by_doc: BTreeMap<&str, Vec<&RetrievalAttempt>> = ledger.iter().fold(BTreeMap::new(), |mut m, a| {
        m.entry(a.doc_id.as_str()).or_insert_with(Vec::new).push(a);
        m
    });
    for r in &recs {
        let attempts = &by_doc[r.id.as_str()];
        if r.has_doi() {
            assert!(!attempts.is_empty());
            assert!(attempts.iter().all(|a| a.outcome != Outcome::NoDoi));
        } else {
            assert_eq!(attempts.len(), 1);
            assert_eq!(attempts[0].outcome, Outcome::NoDoi);
            assert_eq!(r.stage, Stage::FulltextMissing);
        }
        assert!(attempts.iter().all(|a| (a.outcome == Outcome::Ok) == a.payload_kind.is_some()));
    }
    assert_eq!(by_doc["d7"].last().unwrap().outcome, Outcome::Paywalled);
    assert_eq!(by_doc["d9"].len(), 1);
    assert_eq!(recs.iter().find(|r| r.id == "d5").unwrap().retrieved_via, Some(Provider::Publisher));
}

#[test]
fn resume_skips_finished_records() {
    let (fx, mut recs) = ten_record_fixture();
    let server = StubServer::start(fx).unwrap();
    let cfg = stub_config(&server, "t0k");
    let mut ledger = Vec::new();
    let first = harvest_all(&mut recs, &cfg, &mut ledger).unwrap();
    let served = server.hits("/").len();
    let second = harvest_all(&mut recs, &cfg, &mut ledger).unwrap();
    assert_eq!(first.counts, second.counts);
    assert_eq!(second.skipped, 7);
    assert_eq!(second.attempted, 4);
    let newly: Vec<_> = server.hits("/")[served..].iter().map(|h| h.path.clone()).collect();
    assert!(newly.iter().all(|p| !p.contains("oa0") && !p.contains("j.p.4")), "{newly:?}");
    assert!(ledger.iter().any(|a| a.doc_id == "d0" && a.outcome == Outcome::Ok));
}

#[test]
fn transient_failures_are_retried() {
    let (mut fx, _) = ten_record_fixture();
    fx.flaky = 2;
    let server = StubServer::start(fx).unwrap();
    let h = Harvester::new(&stub_config(&server, "t0k")).unwrap();
    assert!(h.resolve_open_access("10.5555/oa1").unwrap().is_some());
    assert_eq!(server.hits("/oa/").len(), 3);

    let (mut fx, _) = ten_record_fixture();
    fx.flaky = 10;
    let server = StubServer::start(fx).unwrap();
    let h = Harvester::new(&stub_config(&server, "t0k")).unwrap();
    assert!(matches!(h.resolve_open_access("10.5555/oa1"), Err(HarvestError::Http { status: 503, .. })));
    assert_eq!(server.hits("/oa/").len(), 3);
}

#[test]
fn request_rate_stays_under_limit() {
    let mut fx = StubFixtures::default();
    let mut recs = Vec::new();
    for i in 0..30 {
        let doi = format!("10.5555/r{i}");
        fx.open_access.insert(doi.clone(), None);
        let mut r = DocumentRecord::new(format!("d{i:02}"), "t", "a", 2020);
        r.doi = Some(doi);
        r.stage = Stage::ScreenedIn;
        recs.push(r);
    }
    let server = StubServer::start(fx).unwrap();
    let rate = 20.0;
    let mut cfg = stub_config(&server, "x");
    cfg.open_access.rate_limit = rate;
    cfg.workers = 8;
    harvest_all(&mut recs, &cfg, &mut Vec::new()).unwrap();
    let times: Vec<_> = server.hits("/oa/").iter().map(|h| h.at).collect();
    assert_eq!(times.len(), 30);
    for (i, &t) in times.iter().enumerate() {
        let in_window = times[i..].iter().take_while(|&&u| u.duration_since(t) < Duration::from_secs(1)).count();
        assert!(in_window as f64 <= rate + 1.0, "{in_window} requests within one second");
    }
    let span = times.last().unwrap().duration_since(times[0]).as_secs_f64();
    assert!(span >= 29.0 / rate * 0.9, "span {span}");
}

#[test]
fn disk_cache_answers_repeat_requests() {
    let (fx, mut recs) = ten_record_fixture();
    let server = StubServer::start(fx).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = stub_config(&server, "t0k");
    cfg.cache_dir = Some(dir.path().to_path_buf());
    let mut fresh = recs.clone();
    harvest_all(&mut recs, &cfg, &mut Vec::new()).unwrap();
    let served = server.hits("/").len();
    let report = harvest_all(&mut fresh, &cfg, &mut Vec::new()).unwrap();
    assert_eq!(server.hits("/").len(), served);
    assert_eq!(report.counts.fulltext_total, 7);
}

#[test]
fn paper_shaped_funnel() {
    let dir = tempfile::tempdir().unwrap();
    let (mut records, cfg) = prisma_fixture::build(dir.path());
    let mut ledger = Vec::new();
    let report = harvest_all(&mut records, &cfg, &mut ledger).unwrap();
    assert_eq!(
        report.counts,
        PrismaCounts {
            identified: 1509,
            screened_included: 538,
            with_doi: 513,
            open_access_retrieved: 72,
            publisher_retrieved: 137,
            fulltext_total: 209,
        }
    );
    let routed = ledger.iter().filter(|a| a.provider == Provider::Publisher).count();
    assert_eq!(routed, prisma_fixture::ROUTED);
    assert_eq!(ledger.iter().filter(|a| a.outcome == Outcome::NoDoi).count(), prisma_fixture::NO_DOI);
}
