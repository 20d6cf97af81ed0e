use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prandtl-gevrey"))
        .args(args)
        .arg("--output_dir")
        .arg(out)
        .env("PRANDTL_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &[&str] = &["--nx", "16", "--ny", "129", "--n_galerkin", "5", "--t_end", "0.01"];

fn with(extra: &[&'static str]) -> Vec<&'static str> {
    SMALL.iter().copied().chain(extra.iter().copied()).collect()
}

#[test]
fn simulate_writes_trace_summary_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[&["simulate"][..], SMALL].concat(), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("run.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("t,"), "{header}");
    assert!(csv.lines().count() > 2);
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["command"], "simulate");
    assert!(dir.path().join("snapshots").read_dir().unwrap().count() >= 2);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [&["simulate"][..], SMALL].concat();
    assert_eq!(run(&args, a.path()).status.code(), Some(0));
    assert_eq!(run(&args, b.path()).status.code(), Some(0));
    for f in ["run.csv", "summary.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn json_format_replaces_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[&["simulate"][..], &with(&["--format", "json"])].concat(), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("run.json").exists());
    assert!(!dir.path().join("run.csv").exists());
}

#[test]
fn diagnose_reads_a_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&[&["simulate"][..], SMALL].concat(), dir.path()).status.code(), Some(0));
    let mut snaps: Vec<_> = dir
        .path()
        .join("snapshots")
        .read_dir()
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    snaps.sort();
    let last = snaps.last().unwrap().to_str().unwrap().to_string();
    let out = dir.path().join("diag");
    let o = run(&["diagnose", "--snapshot", &last], &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["command"], "diagnose");
}

#[test]
fn cfl_violation_exits_16() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["simulate", "--nx", "16", "--ny", "129", "--n_galerkin", "5", "--dt", "0.5", "--t_end", "1"], dir.path());
    assert_eq!(o.status.code(), Some(16), "{}", stderr(&o));
    assert!(stderr(&o).contains("CFL"));
}

#[test]
fn too_few_unstable_modes_exits_19() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "linstab", "--profile", "monotone", "--nx", "32", "--ny", "129", "--n_galerkin", "10", "--kx_list",
            "2,4,6,8,10", "--horizon", "1",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(19), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_names_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "nx = 16\n# comment\nwobble = 3\n").unwrap();
    let o = run(&["simulate", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn negative_sigma_exits_11() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[&["simulate"][..], &with(&["--sigma", "-1"])].concat(), dir.path());
    assert_eq!(o.status.code(), Some(11), "{}", stderr(&o));
}

#[test]
fn missing_command_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&[], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["explode"], dir.path()).status.code(), Some(2));
}

#[test]
fn diagnose_without_snapshot_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["diagnose"], dir.path()).status.code(), Some(2));
}

#[test]
fn divergence_with_zero_eta_has_zero_gap() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[&["divergence"][..], &with(&["--eta", "0"])].concat(), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("run.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let gap: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(gap, 0.0);
    }
}

#[test]
fn verify_passes_with_committed_constants() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("run.csv")).unwrap();
    assert_eq!(csv.lines().count(), 8);
    assert!(csv.lines().skip(1).all(|l| l.contains(",true,")));
}
