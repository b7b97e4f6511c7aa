use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hetdiff_cli::output::read_manifest;
use hetdiff_cli::table::OutputTable;

fn hetdiff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hetdiff")).args(args).output().unwrap()
}

fn hetdiff_in(dir: &Path, threads: Option<&str>, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hetdiff"));
    cmd.current_dir(dir).args(args);
    match threads {
        Some(n) => cmd.env("HETDIFF_THREADS", n),
        None => cmd.env_remove("HETDIFF_THREADS"),
    };
    cmd.output().unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
}

fn read_table(path: &Path) -> OutputTable {
    OutputTable::from_csv(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(hetdiff(&["solve", "--nonsense"]).status.code(), Some(2));
    assert_eq!(hetdiff(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(hetdiff(&["solve", "--eps", "20", "--q", "0.5", "--t", "0.1"]).status.code(), Some(2));
    assert_eq!(hetdiff(&["solve", "--eps", "0.1", "--q", "0.5", "--t", "0.1", "--init", "expr:1+"]).status.code(), Some(2));
    assert_eq!(hetdiff(&["sweep", "--q", "0.8", "--source", "walker"]).status.code(), Some(2));
    let bad_threads = Command::new(env!("CARGO_BIN_EXE_hetdiff"))
        .args(["solve", "--eps", "0.1", "--q", "0.5", "--t", "0.1"])
        .env("HETDIFF_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad_threads.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_4() {
    let out = hetdiff(&["solve", "--eps", "0.1", "--q", "0.5", "--t", "0.1", "--out", "/nonexistent/dir/run"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn help_documents_every_subcommand() {
    for cmd in ["solve", "sweep", "walk", "replay"] {
        let out = hetdiff(&[cmd, "--help"]);
        ok(&out);
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains("--out") && text.contains("--format"), "{cmd}");
    }
}

#[test]
fn equal_seeds_give_identical_walk_tables() {
    let dir = tempfile::tempdir().unwrap();
    let args = |prefix: &'static str| {
        ["walk", "--eps", "0.25", "--q", "0.7", "--n", "20000", "--t", "0.05", "--seed", "7", "--out", prefix]
    };
    ok(&hetdiff_in(dir.path(), Some("1"), &args("a")));
    ok(&hetdiff_in(dir.path(), Some("4"), &args("b")));
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let b = fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    ok(&hetdiff_in(
        dir.path(),
        None,
        &["walk", "--eps", "0.25", "--q", "0.7", "--n", "20000", "--t", "0.05", "--seed", "8", "--out", "c"],
    ));
    assert_ne!(a, fs::read(dir.path().join("c.csv")).unwrap());
}

#[test]
fn homogeneous_walk_matches_heat_kernel_and_reports_left_mass() {
    let dir = tempfile::tempdir().unwrap();
    ok(&hetdiff_in(
        dir.path(),
        None,
        &["walk", "--eps", "1", "--q", "0", "--delta", "0.01", "--n", "2e5", "--t", "0.1", "--seed", "7", "--out", "h"],
    ));
    let t = read_table(&dir.path().join("h.csv"));
    let l1: f64 = t.meta["l1_distance"].parse().unwrap();
    assert!(l1 <= 0.05, "{l1}");
    let col = t.columns.iter().position(|c| c == "l1_distance").unwrap();
    assert!(t.rows.iter().all(|r| r[col] == l1));

    ok(&hetdiff_in(
        dir.path(),
        None,
        &["walk", "--eps", "0.01", "--q", "0.9", "--n", "20000", "--t", "0.1", "--out", "w"],
    ));
    let t = read_table(&dir.path().join("w.csv"));
    let col = t.columns.iter().position(|c| c == "left_mass_fraction").unwrap();
    let f = t.rows[0][col];
    assert!(f > 0.0 && f < 1.0);
}

#[test]
fn csv_and_json_outputs_hold_the_same_table() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["solve", "--source", "fd-y", "--init", "step:1:0.5", "--eps", "0.2", "--q", "0.7", "--t", "0.005,0.01", "--dx", "0.01"];
    let mut csv = base.to_vec();
    csv.extend(["--out", "r"]);
    let mut json = base.to_vec();
    json.extend(["--out", "r", "--format", "json"]);
    ok(&hetdiff_in(dir.path(), None, &csv));
    ok(&hetdiff_in(dir.path(), None, &json));
    let from_csv = read_table(&dir.path().join("r.csv"));
    let bundle: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    let keys: Vec<&String> = bundle.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["manifest", "table"]);
    let from_json = OutputTable::from_json(bundle["table"].clone()).unwrap();
    assert_eq!(from_csv, from_json);
    assert_eq!(from_csv.columns, ["x", "u(t=0.005)", "u(t=0.01)"]);
    let m = read_manifest(&dir.path().join("r.json")).unwrap();
    assert_eq!(m, read_manifest(&dir.path().join("r.manifest.json")).map(|mut c| {
        c.wall_time_s = m.wall_time_s;
        c.outputs.clear();
        c.argv = m.argv.clone();
        c
    }).unwrap());
}

#[test]
fn replay_reproduces_the_table() {
    let dir = tempfile::tempdir().unwrap();
    ok(&hetdiff_in(
        dir.path(),
        None,
        &["sweep", "--q", "0.6", "--source", "fd-x", "--eps-range", "1e-2:1:5", "--dx", "0.01", "--out", "s"],
    ));
    ok(&hetdiff_in(dir.path(), Some("2"), &["replay", "s.manifest.json", "--out", "again"]));
    assert_eq!(fs::read(dir.path().join("s.csv")).unwrap(), fs::read(dir.path().join("again.csv")).unwrap());

    let path = dir.path().join("s.manifest.json");
    let tampered = fs::read_to_string(&path).unwrap().replace("\"table_sha256\": \"", "\"table_sha256\": \"00");
    fs::write(&path, tampered).unwrap();
    assert_eq!(hetdiff_in(dir.path(), None, &["replay", "s.manifest.json"]).status.code(), Some(3));
}

#[test]
fn closed_form_snapshot_at_unit_sigma_is_the_heat_kernel() {
    let out = hetdiff(&["solve", "--source", "closed", "--init", "dirac:1", "--eps", "0.25", "--q", "0.5", "--t", "0.01"]);
    ok(&out);
    let t = OutputTable::from_csv(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert!(t.rows.len() > 100);
    for r in &t.rows {
        let (x, u) = (r[0], r[1]);
        let d = if x < 0.0 { 0.25 } else { 1.0 };
        // u = D^{-1/2} p with p the whole-line kernel in y = x / sqrt(D)
        let y: f64 = x / f64::sqrt(d);
        let p = (-(y - 1.0).powi(2) / 0.04).exp() / f64::sqrt(std::f64::consts::PI * 0.04);
        assert!((u - p / d.sqrt()).abs() <= 1e-12 * (1.0 + p), "x={x}");
    }
}

#[test]
fn exponent_curve_file() {
    let out = hetdiff(&["sweep", "--curve", "--q-range", "0.5:1:50"]);
    ok(&out);
    let t = OutputTable::from_csv(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(t.rows.len(), 50);
    assert!((t.rows[0][0] - 0.52).abs() < 1e-15);
    assert!(t.meta.contains_key("trend_slope"));
}
