mod common;

use std::path::Path;

use aerocorpus::archive::read_members;
use aerocorpus::config::PipelineConfig;
use aerocorpus::runner::{failed_from_report, plan, report_tsv, Stage, Strategy};
use aerocorpus::workflow::{counts_manifest, run_e2e, run_stage, run_stats, stage_plan, Resources};
use common::*;

fn zips(root: &Path) -> Vec<std::path::PathBuf> {
    let mut v: Vec<_> = walkdir::WalkDir::new(root)
        .into_iter()
        .filter_map(Result::ok)
        .map(|e| e.into_path())
        .filter(|p| p.extension().is_some_and(|e| e == "zip"))
        .collect();
    v.sort();
    v
}

#[test]
fn stages_run_separately_match_e2e() {
    let a = tempfile::tempdir().unwrap();
    let cfg = fixture_config(a.path());
    let res = Resources::load(&cfg).unwrap();
    let e2e = run_e2e(&cfg, &res).unwrap();
    assert_eq!(e2e.failed, 0);

    let b = tempfile::tempdir().unwrap();
    let mut staged_cfg = fixture_config(b.path());
    staged_cfg.workers = 1;
    staged_cfg.strategy = Strategy::StaticUniform;
    let mut all = Vec::new();
    for stage in [Stage::Organize, Stage::Pack, Stage::Process] {
        let tasks = stage_plan(stage, &staged_cfg).unwrap();
        assert!(!tasks.is_empty(), "{stage} planned nothing");
        all.extend(run_stage(stage, &tasks, &staged_cfg, &res));
    }
    run_stats(&staged_cfg, &res).unwrap();

    assert_eq!(counts_manifest(&all), e2e.manifest);
    assert_eq!(tree_bytes(&staged_cfg.stats_root), tree_bytes(&cfg.stats_root));
    assert_eq!(tree_bytes(&staged_cfg.processed_root), tree_bytes(&cfg.processed_root));
}

#[test]
fn frozen_manifest_matches() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture_config(dir.path());
    let res = Resources::load(&cfg).unwrap();
    let out = run_e2e(&cfg, &res).unwrap();
    let want = std::fs::read_to_string(fixture_dir().join("reference/counts_manifest.tsv")).unwrap();
    assert_eq!(out.manifest, want);
}

#[test]
fn repacking_updates_archives_in_place() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture_config(dir.path());
    let res = Resources::load(&cfg).unwrap();
    assert_eq!(run_e2e(&cfg, &res).unwrap().failed, 0);
    let archives = zips(&cfg.archive_root);
    assert!(!archives.is_empty());
    let before: Vec<_> = archives.iter().map(|z| read_members(z).unwrap()).collect();
    let stats_before = tree_bytes(&cfg.stats_root);

    // Organizing the same hours again writes loose files beside the archives.
    let org = run_stage(Stage::Organize, &stage_plan(Stage::Organize, &cfg).unwrap(), &cfg, &res);
    assert!(org.iter().all(|r| r.outcome.label() == "ok"));
    let pack = run_stage(Stage::Pack, &stage_plan(Stage::Pack, &cfg).unwrap(), &cfg, &res);
    assert!(pack.iter().all(|r| r.outcome.label() != "failed"));

    assert_eq!(zips(&cfg.archive_root), archives);
    let after: Vec<_> = archives.iter().map(|z| read_members(z).unwrap()).collect();
    assert_eq!(after, before);
    let loose = walkdir::WalkDir::new(&cfg.organized_root)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
        .count();
    assert_eq!(loose, 0, "loose leaf files left after pack");

    run_stats(&cfg, &res).unwrap();
    assert_eq!(tree_bytes(&cfg.stats_root), stats_before);
}

#[test]
fn failed_tasks_can_be_retried_from_report() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw");
    std::fs::create_dir(&raw).unwrap();
    let src = fixture_dir().join("raw/2020-03-16");
    for name in ["states_2020-03-16-05.csv.gz", "states_2020-03-16-06.csv.gz"] {
        std::fs::copy(src.join(name), raw.join(name)).unwrap();
    }
    let broken = raw.join("states_2020-03-16-07.csv.gz");
    std::fs::write(&broken, b"\x1f\x8bnot really gzip").unwrap();

    let mut cfg: PipelineConfig = fixture_config(dir.path());
    cfg.raw_root = raw.clone();
    let res = Resources::load(&cfg).unwrap();
    let first = run_stage(Stage::Organize, &stage_plan(Stage::Organize, &cfg).unwrap(), &cfg, &res);
    assert_eq!(first.len(), 3);
    let failed: Vec<_> = first.iter().filter(|r| r.outcome.label() == "failed").collect();
    assert_eq!(failed.len(), 1);
    assert!(failed[0].spec.input.contains("2020-03-16-07"));

    let retry = failed_from_report(&report_tsv(&first)).unwrap();
    assert_eq!(retry, vec![(Stage::Organize, failed[0].spec.input.clone())]);

    // Replace the broken hour with a valid copy of another hour and retry only it.
    std::fs::copy(src.join("states_2020-03-16-06.csv.gz"), &broken).unwrap();
    let tasks = plan(Stage::Organize, retry.into_iter().map(|(_, i)| (i, None)));
    let second = run_stage(Stage::Organize, &tasks, &cfg, &res);
    assert_eq!(second.len(), 1);
    assert_eq!(second[0].outcome.label(), "ok");
    assert!(failed_from_report(&report_tsv(&second)).unwrap().is_empty());
}
