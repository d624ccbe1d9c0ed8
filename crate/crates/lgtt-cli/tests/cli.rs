use std::path::Path;
use std::process::{Command, Output};

fn lgtt(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lgtt")).args(args).current_dir(dir).output().unwrap()
}

fn a2_file(dir: &Path) {
    std::fs::write(
        dir.join("a2.toml"),
        "vars = [\"z\"]\nexpr = \"z^3/3\"\ndeformers = [\"1\", \"z\"]\nt = [\"0\", \"-1+0.3i\"]\ntau = \"1\"\n",
    )
    .unwrap();
}

#[test]
fn moduli_for_the_quintic() {
    let dir = tempfile::tempdir().unwrap();
    let out = lgtt(&["moduli", "--n", "5", "--d", "5"], dir.path());
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "moduli_dim=101 marginal=101 match=yes");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(lgtt(&["periods"], dir.path()).status.code(), Some(2));
    assert_eq!(lgtt(&["bogus"], dir.path()).status.code(), Some(2));
    let missing = lgtt(&["periods", "missing.toml"], dir.path());
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("error"));
    a2_file(dir.path());
    assert_eq!(lgtt(&["periods", "a2.toml", "--t", "1"], dir.path()).status.code(), Some(1));
}

#[test]
fn periods_write_tables_and_manifests() {
    let dir = tempfile::tempdir().unwrap();
    a2_file(dir.path());
    let out = lgtt(&["periods", "a2.toml", "--out", "p.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["p.csv", "p.csv.report.txt", "p.csv.plus.csv"] {
        let path = dir.path().join(f);
        assert!(path.exists(), "{f}");
        let manifest = std::fs::read_to_string(dir.path().join(format!("{f}.manifest.toml"))).unwrap();
        let doc: toml::Table = manifest.parse().unwrap();
        assert_eq!(doc["command"].as_str(), Some("periods"));
        assert_eq!(doc["seed"].as_integer(), Some(0));
        assert_eq!(doc["inputs"].as_array().unwrap().len(), 1);
        assert_eq!(doc["outputs"].as_array().unwrap().len(), 3);
    }
    let report = std::fs::read_to_string(dir.path().join("p.csv.report.txt")).unwrap();
    assert!(report.contains("witten_row = [-1, 0]"), "{report}");
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    a2_file(dir.path());
    let a = lgtt(&["periods", "a2.toml", "--format", "csv"], dir.path());
    let b = lgtt(&["periods", "a2.toml", "--format", "csv", "--threads", "1"], dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn overrides_and_loops() {
    let dir = tempfile::tempdir().unwrap();
    a2_file(dir.path());
    let out = lgtt(&["monodromy", "a2.toml", "--tau", "2", "--steps", "32"], dir.path());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(text.contains("order 3"), "{text}");
    let bad = lgtt(&["monodromy", "a2.toml", "--loop", "t:9:0.5"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn analyze_reports_weights_and_milnor_number() {
    let dir = tempfile::tempdir().unwrap();
    a2_file(dir.path());
    let out = lgtt(&["analyze", "a2.toml"], dir.path());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("weights = [1/3]"));
    assert!(text.contains("mu = 2"));
    assert!(text.contains("tameness = StronglyTame"));
}
