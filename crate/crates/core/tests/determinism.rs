use std::fs;
use std::path::Path;

use spraysim::experiment::{run_to_dir, ExperimentConfig};
use spraysim::verify::smoke_configs;

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn run(cfg: &ExperimentConfig, jobs: usize) -> (tempfile::TempDir, Vec<(String, Vec<u8>)>) {
    let dir = tempfile::tempdir().unwrap();
    run_to_dir(cfg, dir.path(), jobs).unwrap();
    let f = files(dir.path());
    (dir, f)
}

#[test]
fn same_seed_gives_identical_bytes() {
    for mut cfg in smoke_configs() {
        cfg.output.trace = true;
        cfg.output.cwnd_series = true;
        let (_a, first) = run(&cfg, 1);
        let (_b, second) = run(&cfg, 3);
        let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
        for expected in ["flows.csv", "summary.csv", "ccdf.csv", "manifest.json", "scenarios.json", "cwnd.csv"] {
            assert!(names.contains(&expected), "{expected} missing from {names:?}");
        }
        assert!(names.iter().any(|n| n.starts_with("traces")));
        assert_eq!(first, second, "{}", cfg.scenario.label());
    }
}

#[test]
fn seed_base_changes_results() {
    let cfg = smoke_configs().remove(0);
    let mut shifted = cfg.clone();
    shifted.seed_base = 1_000;
    let (_a, a) = run(&cfg, 2);
    let (_b, b) = run(&shifted, 2);
    let flows = |f: &[(String, Vec<u8>)]| f.iter().find(|(n, _)| n == "flows.csv").unwrap().1.clone();
    assert_ne!(flows(&a), flows(&b));
}

#[test]
fn manifest_records_effective_values() {
    let cfg = smoke_configs().remove(0);
    let dir = tempfile::tempdir().unwrap();
    run_to_dir(&cfg, dir.path(), 2).unwrap();
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    let resolved = &manifest["resolved"];
    assert_eq!(resolved["runs"], 4);
    assert_eq!(resolved["seeds"].as_array().unwrap().len(), 4);
    assert_eq!(resolved["queue_capacity_bytes"], 175_000);
    assert_eq!(manifest["runs"].as_array().unwrap().len(), 4);
    let echoed: ExperimentConfig = serde_json::from_value(manifest["config"].clone()).unwrap();
    assert_eq!(echoed, cfg);
}
