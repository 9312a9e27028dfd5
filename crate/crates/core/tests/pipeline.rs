use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use litscape_core::corpus::{self, PrismaCounts};
use litscape_core::densclust::ClusterAssignment;
use litscape_core::llmextract::TranscriptMode;
use litscape_core::pipeline::fixture::{self, write_mini_corpus};
use litscape_core::pipeline::{
    run, verify_manifest, ErrorClass, PipelineError, ProviderKind, RunConfig, RunManifest, RunOptions, StageName, StageStatus,
};

fn mini(dir: &Path) -> RunConfig {
    RunConfig::load(&write_mini_corpus(dir).unwrap()).unwrap()
}

fn stages(names: &[StageName]) -> RunOptions {
    RunOptions { stages: names.to_vec(), ..RunOptions::default() }
}

fn tree_bytes(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn full_run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = mini(dir.path());
    let m = run(&cfg, &RunOptions::default()).unwrap();
    assert!(m.complete);
    assert_eq!(m.seed, 42);
    assert_eq!(m.stages.len(), StageName::ALL.len());
    assert!(m.stages.iter().all(|s| s.status == StageStatus::Ran));
    for s in &m.stages {
        for rel in s.outputs.keys() {
            assert!(cfg.output_dir.join(rel).is_file(), "{rel}");
        }
    }
    assert!(verify_manifest(&cfg.output_dir).unwrap().is_empty());

    let prisma: PrismaCounts =
        serde_json::from_slice(&std::fs::read(cfg.output_dir.join("report/prisma.json")).unwrap()).unwrap();
    assert_eq!(prisma.identified, 48 + fixture::EXCLUDED + fixture::NO_DOI + fixture::CLOSED + fixture::PAYWALLED);
    assert_eq!(prisma.screened_included, prisma.identified - fixture::EXCLUDED);
    assert_eq!(prisma.fulltext_total, 48);

    let assignment = std::fs::read(cfg.output_dir.join("cluster/assignment.csv")).unwrap();
    let (ids, a) = ClusterAssignment::read_csv(&assignment[..]).unwrap();
    assert_eq!(ids.len(), 48);
    assert_eq!(a.n_clusters(), 3);
    let docs = corpus::load_jsonl(&cfg.output_dir.join("corpus/documents.jsonl")).unwrap();
    for c in 0..3 {
        let members = a.members(c);
        assert_eq!(members.len(), fixture::PER_TOPIC);
        let topic = |i: usize| docs[i].keywords[0].clone();
        assert!(members.iter().all(|&i| topic(i) == topic(members[0])), "cluster {c} mixes topics");
    }

    let svg = std::fs::read_to_string(cfg.output_dir.join("report/scatter.svg")).unwrap();
    assert!(svg.contains("seed 42"));
    assert_eq!(svg.matches("class=\"legend-entry\"").count(), 3 + usize::from(a.noise_count() > 0));
}

#[test]
fn unchanged_rerun_skips_every_stage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = mini(dir.path());
    let first = run(&cfg, &RunOptions::default()).unwrap();
    let second = run(&cfg, &RunOptions::default()).unwrap();
    assert!(second.complete);
    assert!(second.stages.iter().all(|s| s.status == StageStatus::Skipped));
    assert_eq!(first.output_hashes(), second.output_hashes());

    let forced = run(&cfg, &RunOptions { force: true, ..stages(&[StageName::Terms]) }).unwrap();
    assert_eq!(forced.stage(StageName::Terms).unwrap().status, StageStatus::Ran);
    assert_eq!(first.output_hashes(), forced.output_hashes());
}

#[test]
fn config_change_reruns_only_downstream() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = mini(dir.path());
    run(&cfg, &RunOptions::default()).unwrap();
    cfg.terms.top_n = 4;
    let m = run(&cfg, &RunOptions::default()).unwrap();
    let status = |n: StageName| m.stage(n).unwrap().status;
    for n in [StageName::Ingest, StageName::Harvest, StageName::Embed, StageName::Cluster, StageName::Label] {
        assert_eq!(status(n), StageStatus::Skipped, "{n}");
    }
    assert_eq!(status(StageName::Terms), StageStatus::Ran);
    assert_eq!(status(StageName::Report), StageStatus::Ran);
}

#[test]
fn missing_upstream_artifact_names_the_producer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = mini(dir.path());
    let err = run(&cfg, &stages(&[StageName::Cluster])).unwrap_err();
    match &err {
        PipelineError::MissingDependency { stage, needs, .. } => {
            assert_eq!(stage, "cluster");
            assert_eq!(needs, "reduce");
        }
        e => panic!("unexpected error {e}"),
    }
    assert_eq!(err.class(), ErrorClass::Dependency);
    let partial = RunManifest::load(&cfg.output_dir).unwrap().unwrap();
    assert!(!partial.complete);
    assert_eq!(partial.stage(StageName::Cluster).unwrap().status, StageStatus::Failed);
}

#[test]
fn stages_run_one_at_a_time_match_a_full_run() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (ca, cb) = (mini(a.path()), mini(b.path()));
    run(&ca, &RunOptions::default()).unwrap();
    for s in StageName::ALL {
        run(&cb, &stages(&[s])).unwrap();
    }
    let manifest = |c: &RunConfig| RunManifest::load(&c.output_dir).unwrap().unwrap();
    assert!(manifest(&cb).complete);
    assert_eq!(manifest(&ca).output_hashes(), manifest(&cb).output_hashes());
}

#[test]
fn replay_without_recording_fails_as_provider_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = mini(dir.path());
    std::fs::write(dir.path().join("transcripts.json"), r#"{"entries": {}}"#).unwrap();
    let err = run(&cfg, &RunOptions::default()).unwrap_err();
    assert!(matches!(&err, PipelineError::Stage { stage, .. } if stage == "label"), "{err}");
    assert_eq!(err.class(), ErrorClass::Provider);
    let partial = RunManifest::load(&cfg.output_dir).unwrap().unwrap();
    assert_eq!(partial.stage(StageName::Cluster).unwrap().status, StageStatus::Ran);
    assert!(!partial.complete);
}

#[test]
fn tampered_output_is_reported_and_rebuilt() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = mini(dir.path());
    run(&cfg, &RunOptions::default()).unwrap();
    std::fs::write(cfg.output_dir.join("report/trend.csv"), "x").unwrap();
    let problems = verify_manifest(&cfg.output_dir).unwrap();
    assert_eq!(problems.len(), 1, "{problems:?}");
    assert!(problems[0].contains("report/trend.csv"));
    let m = run(&cfg, &RunOptions::default()).unwrap();
    assert_eq!(m.stage(StageName::Report).unwrap().status, StageStatus::Ran);
    assert!(verify_manifest(&cfg.output_dir).unwrap().is_empty());
}

#[test]
fn seed_override_changes_layout_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = mini(dir.path());
    let first = run(&cfg, &RunOptions::default()).unwrap();
    let mut reseeded = cfg.clone().with_seed(7);
    reseeded.chat.provider = ProviderKind::Heuristic;
    reseeded.chat.mode = TranscriptMode::Record;
    let second = run(&reseeded, &RunOptions::default()).unwrap();
    assert_eq!(second.seed, 7);
    assert_eq!(second.stage(StageName::Harvest).unwrap().status, StageStatus::Skipped);
    assert_eq!(second.stage(StageName::Reduce).unwrap().status, StageStatus::Ran);
    let h = |m: &RunManifest, k: &str| m.output_hashes()[k].clone();
    assert_eq!(h(&first, "corpus/documents.jsonl"), h(&second, "corpus/documents.jsonl"));
    assert_ne!(h(&first, "reduce/projection_scatter.csv"), h(&second, "reduce/projection_scatter.csv"));
}

#[test]
fn two_fresh_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (ca, cb) = (mini(a.path()), mini(b.path()));
    run(&ca, &RunOptions::default()).unwrap();
    run(&cb, &RunOptions::default()).unwrap();
    let (mut ta, mut tb) = (tree_bytes(&ca.output_dir), tree_bytes(&cb.output_dir));
    ta.remove(Path::new("manifest.json"));
    tb.remove(Path::new("manifest.json"));
    assert_eq!(ta.keys().collect::<Vec<_>>(), tb.keys().collect::<Vec<_>>());
    for (k, v) in &ta {
        assert!(v == &tb[k], "{} differs", k.display());
    }
    assert_eq!(
        std::fs::read(a.path().join("transcripts.json")).unwrap(),
        std::fs::read(b.path().join("transcripts.json")).unwrap()
    );
}

#[test]
fn shipped_mini_corpus_matches_generator() {
    let dir = tempfile::tempdir().unwrap();
    write_mini_corpus(dir.path()).unwrap();
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/mini");
    let mut want = tree_bytes(&shipped);
    want.retain(|k, _| !k.starts_with("out") && !k.starts_with("cache"));
    let got = tree_bytes(dir.path());
    assert_eq!(want.keys().collect::<Vec<_>>(), got.keys().collect::<Vec<_>>());
    for (k, v) in &got {
        assert!(v == &want[k], "{} is stale; regenerate with `litscape fixture fixtures/mini`", k.display());
    }
}
