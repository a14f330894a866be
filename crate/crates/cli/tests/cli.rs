use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aerocorpus"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn aerocorpus")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixture").canonicalize().unwrap()
}

fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let text = format!(
        "include = {}\norganized_root = organized\narchive_root = archives\nprocessed_root = processed\n\
         stats_root = stats\nreport_root = reports\n{extra}",
        fixture().join("inputs.cfg").display()
    );
    let path = dir.join("run.cfg");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn no_arguments_is_usage_error() {
    assert_eq!(run(&[]).status.code(), Some(2));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn version_names_build_target() {
    let o = run(&["--version"]);
    assert_eq!(o.status.code(), Some(0));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains(env!("CARGO_PKG_VERSION")), "{out}");
}

#[test]
fn colliding_roots_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "processed_root = organized\n");
    let o = run(&["organize", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.lines().any(|l| l.starts_with("error[config]:")), "{err}");
    assert!(err.contains("organized_root") && err.contains("processed_root"), "{err}");
}

#[test]
fn missing_config_is_config_error() {
    let o = run(&["pack", "--config", "/nonexistent/aerocorpus.cfg"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn e2e_over_fixture_writes_reports_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let o = run(&["e2e", "--config", cfg.to_str().unwrap(), "--workers", "3", "--strategy", "size-sorted-dynamic"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let reports = dir.path().join("reports");
    for f in ["organize_report.tsv", "pack_report.tsv", "process_report.tsv", "counts_manifest.tsv", "run.log"] {
        assert!(reports.join(f).is_file(), "missing {f}");
    }
    let manifest = std::fs::read_to_string(reports.join("counts_manifest.tsv")).unwrap();
    let want = std::fs::read_to_string(fixture().join("reference/counts_manifest.tsv")).unwrap();
    assert_eq!(manifest, want);

    let log = std::fs::read_to_string(reports.join("run.log")).unwrap();
    assert!(log.lines().count() >= 3);
    assert!(log.lines().all(|l| l.split('\t').count() == 5), "{log}");
    assert!(std::fs::read_dir(dir.path().join("stats")).unwrap().count() > 0);

    // Nothing failed, so a retry has nothing to do and succeeds.
    let report = reports.join("organize_report.tsv");
    let o = run(&["organize", "--config", cfg.to_str().unwrap(), "--retry-failed", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn failing_task_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw");
    std::fs::create_dir(&raw).unwrap();
    std::fs::write(raw.join("states_2020-03-16-07.csv.gz"), b"garbage").unwrap();
    let cfg = write_config(dir.path(), "raw_root = raw\n");
    let o = run(&["organize", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).lines().any(|l| l.starts_with("error[tasks]:")), "{}", stderr(&o));
}

#[test]
fn build_polygon_writes_buffered_hull() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("pts.geojson");
    std::fs::write(
        &pts,
        r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{},"geometry":{"type":"Point","coordinates":[-71.0,42.0]}},
            {"type":"Feature","properties":{},"geometry":{"type":"Point","coordinates":[-70.0,42.0]}},
            {"type":"Feature","properties":{},"geometry":{"type":"Point","coordinates":[-70.5,43.0]}},
            {"type":"Feature","properties":{},"geometry":{"type":"Point","coordinates":[-70.5,42.4]}}]}"#,
    )
    .unwrap();
    let out = dir.path().join("poly.geojson");
    let o = run(&["build-polygon", "--points", pts.to_str().unwrap(), "--buffer-nm", "10", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let text = v.to_string();
    assert!(text.contains("Polygon"), "{text}");
    assert!(text.contains("\"source_points\":4"), "{text}");
}
