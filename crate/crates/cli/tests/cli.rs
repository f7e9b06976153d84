use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radial-qec"))
        .args(args)
        .current_dir(dir)
        .env("RADIAL_QEC_THREADS", "1")
        .output()
        .unwrap()
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = cli(args, dir);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn construct_writes_matrices_and_coordinates() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["construct", "quantum", "--preset", "qr_90_8_10", "--out", "q"], dir.path());
    let coords = std::fs::read_to_string(dir.path().join("q/coordinates.csv")).unwrap();
    assert_eq!(coords.lines().count(), 91);
    assert!(coords.starts_with("index,kind,c,u,v\n"));
    let hx: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("q/hx.json")).unwrap()).unwrap();
    assert_eq!(hx["cols"], 90);
    let logicals: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("q/logicals.json")).unwrap()).unwrap();
    assert_eq!(logicals["x"].as_array().unwrap().len(), 8);
    assert!(std::fs::read_to_string(dir.path().join("q/hz.alist")).unwrap().starts_with("45 90\n"));

    std::fs::write(dir.path().join("a.json"), r#"{"r": 2, "s": 3, "a": [[0, 0], [1, 0]]}"#).unwrap();
    let report = cli(&["construct", "classical", "--a-file", "a.json", "--emit-pcm", "h.alist"], dir.path());
    // the toy matrix has a zero row over GF(3), so the classical checks reject it
    assert_eq!(report.status.code(), Some(2));
    assert!(dir.path().join("h.alist").exists());
}

#[test]
fn circuit_to_decode_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["circuit", "--preset", "toy_2_3", "--cycles", "2", "--out", "c.txt"], d);
    ok(&["dem", "--circuit", "c.txt", "--p", "0.003", "--out", "dem.json"], d);
    ok(&["simulate", "--circuit", "c.txt", "--p", "0.003", "--shots", "64", "--seed", "4", "--out", "d.bin", "--obs-out", "o.bin"], d);
    let summary = ok(
        &["decode", "--dem", "dem.json", "--shots", "d.bin", "--obs", "o.bin", "--max-iter", "20", "--osd", "cs2", "--out", "p.csv"],
        d,
    );
    assert!(summary.contains("in 64 shots"));
    let table = std::fs::read_to_string(d.join("p.csv")).unwrap();
    assert_eq!(table.lines().count(), 65);
    assert_eq!(table.lines().next().unwrap(), "shot,prediction,failed");
}

#[test]
fn bench_sweeps_grid_and_honours_config() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("cfg.json"),
        r#"{"version": 1, "preset": "toy_2_3", "p": 0.01, "cycles": 2, "shots": 50, "bp": {"max_iter": 10}, "seed": 3}"#,
    )
    .unwrap();
    ok(&["bench", "--config", "cfg.json", "--p", "0.002,0.004", "--cycles", "1,2", "--out", "b.csv", "--json", "b.json"], d);
    let rows = radial_qec::harness::read_csv(std::fs::File::open(d.join("b.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.shots == 50 && r.seed == 3));
    assert_eq!((rows[3].p, rows[3].cycles), (0.004, 2));

    ok(&["sweep-iters", "--config", "cfg.json", "--iters", "1,5", "--out", "s.csv"], d);
    let sweep = std::fs::read_to_string(d.join("s.csv")).unwrap();
    assert!(sweep.starts_with("max_iter,p,cycles"));
    assert_eq!(sweep.lines().count(), 3);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("old.json"), r#"{"version": 7, "preset": "toy_2_3", "p": 0.01, "cycles": 2, "shots": 5}"#).unwrap();
    assert_eq!(cli(&["bench", "--config", "old.json", "--out", "x.csv"], d).status.code(), Some(2));
    assert_eq!(cli(&["circuit", "--preset", "nope", "--out", "c.txt"], d).status.code(), Some(2));
    assert_eq!(cli(&["bench", "--bogus"], d).status.code(), Some(2));
    let budget = cli(&["analyze", "confinement", "--preset", "qr_90_8_10", "--wmax", "3", "--limit", "100"], d);
    assert_eq!(budget.status.code(), Some(3));
    assert_eq!(cli(&["dem", "--circuit", "missing.txt", "--out", "x"], d).status.code(), Some(1));
}

#[test]
fn analysis_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let text = ok(&["analyze", "distance", "--preset", "toy_2_3", "--trials", "100", "--seed", "1"], d);
    let est: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(est.as_array().unwrap().len(), 2);
    assert_eq!(est[0]["d_est"], 4);
    ok(&["analyze", "confinement", "--preset", "toy_2_3", "--wmax", "2", "--csv", "conf.csv", "--out", "conf.json"], d);
    assert!(std::fs::read_to_string(d.join("conf.csv")).unwrap().lines().count() >= 3);
}
