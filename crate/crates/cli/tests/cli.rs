use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fiedler_core::dataset::Dataset;

fn fiedler(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fiedler"))
        .args(args)
        .env_remove("FIEDLER_SEED")
        .output()
        .expect("spawn fiedler")
}

fn ok(args: &[&str]) -> String {
    let out = fiedler(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    fiedler(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path, name: &str, count: usize, seed: u64) -> PathBuf {
    let out = dir.join(name);
    ok(&[
        "gen-data",
        "--count",
        &count.to_string(),
        "--n-min",
        "5",
        "--n-max",
        "7",
        "--seed",
        &seed.to_string(),
        "--out",
        s(&out),
    ]);
    out
}

/// Trains a tiny model; returns the output directory.
fn train_small(dir: &Path, mode: &str, epochs: usize) -> PathBuf {
    let train = gen(dir, &format!("train-{mode}.txt"), 40, 1);
    let val = gen(dir, &format!("val-{mode}.txt"), 15, 2);
    let out = dir.join(format!("run-{mode}"));
    ok(&[
        "train",
        "--train-data",
        s(&train),
        "--val-data",
        s(&val),
        "--T",
        "3",
        "--mode",
        mode,
        "--hidden",
        "6",
        "--epochs",
        &epochs.to_string(),
        "--batch",
        "16",
        "--seed",
        "5",
        "--out-dir",
        s(&out),
        "--no-wall-time",
    ]);
    out
}

#[test]
fn gen_data_count_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.txt");
    let args = |p: &Path| {
        vec![
            "gen-data".to_string(),
            "--count".into(),
            "1000".into(),
            "--n-min".into(),
            "9".into(),
            "--n-max".into(),
            "11".into(),
            "--seed".into(),
            "7".into(),
            "--out".into(),
            s(p).into(),
        ]
    };
    let a = args(&out);
    ok(&a.iter().map(String::as_str).collect::<Vec<_>>());
    let ds = Dataset::read_from(fs::read(&out).unwrap().as_slice()).unwrap();
    assert_eq!(ds.len(), 1000);
    assert!(ds.iter().all(|i| (9..=11).contains(&i.graph.node_count())));

    let again = dir.path().join("e.txt");
    let b = args(&again);
    ok(&b.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());

    // Same path again without --force is refused.
    assert_eq!(code(&a.iter().map(String::as_str).collect::<Vec<_>>()), 1);
}

#[test]
fn gen_data_rejects_inverted_range() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.txt");
    let args = ["gen-data", "--count", "5", "--n-min", "12", "--n-max", "9", "--out", s(&out)];
    assert_eq!(code(&args), 1);
    assert!(!out.exists());
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["gen-data", "--count", "4", "--seed", "42", "--out", s(&a)]);
    let st = Command::new(env!("CARGO_BIN_EXE_fiedler"))
        .args(["gen-data", "--count", "4", "--out", s(&b)])
        .env("FIEDLER_SEED", "42")
        .status()
        .unwrap();
    assert!(st.success());
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn train_writes_one_row_per_epoch_and_guards_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = train_small(dir.path(), "local", 3);
    let csv = fs::read_to_string(out.join("metrics.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "epoch,train_l2,val_l1,val_l2,wall_time_s");
    assert_eq!(lines.len(), 4);
    for (i, l) in lines[1..].iter().enumerate() {
        assert!(l.starts_with(&format!("{},", i + 1)));
    }
    for e in 1..=3 {
        assert!(out.join(format!("epoch-{e:03}.params")).exists());
    }
    assert!(out.join("final.params").exists());
    assert_eq!(
        fs::read(out.join("final.params")).unwrap(),
        fs::read(out.join("epoch-003.params")).unwrap()
    );

    // A second run into the same directory needs --force.
    let (train, val) = (dir.path().join("train-local.txt"), dir.path().join("val-local.txt"));
    let rerun = [
        "train",
        "--train-data",
        s(&train),
        "--val-data",
        s(&val),
        "--epochs",
        "1",
        "--hidden",
        "4",
        "--out-dir",
        s(&out),
    ];
    assert_eq!(code(&rerun), 1);
    let mut forced = rerun.to_vec();
    forced.push("--force");
    ok(&forced);
}

#[test]
fn train_rejects_zero_epochs() {
    let dir = tempfile::tempdir().unwrap();
    let d = gen(dir.path(), "d.txt", 5, 0);
    let o = dir.path().join("o");
    let args = [
        "train",
        "--train-data",
        s(&d),
        "--val-data",
        s(&d),
        "--epochs",
        "0",
        "--out-dir",
        s(&o),
    ];
    assert_eq!(code(&args), 1);
}

#[test]
fn eval_reproduces_final_metrics_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = train_small(dir.path(), "global", 2);
    let csv = fs::read_to_string(out.join("metrics.csv")).unwrap();
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    let eval_csv = dir.path().join("eval.csv");
    ok(&[
        "eval",
        "--checkpoint",
        s(&out.join("final.params")),
        "--data",
        s(&dir.path().join("val-global.txt")),
        "--out",
        s(&eval_csv),
    ]);
    let text = fs::read_to_string(&eval_csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("mean_l1,mean_l2,count"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((row[0] - last[2]).abs() <= 1e-12, "{row:?} vs {last:?}");
    assert!((row[1] - last[3]).abs() <= 1e-12);
    assert_eq!(row[2], 15.0);
}

#[test]
fn eval_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = train_small(dir.path(), "local", 1);
    let ck = out.join("final.params");
    let data = dir.path().join("val-local.txt");
    assert_ne!(code(&["eval", "--checkpoint", s(&ck), "--data", "/nonexistent/x"]), 0);
    assert_ne!(code(&["eval", "--checkpoint", "/nonexistent/ck", "--data", s(&data)]), 0);

    let mismatch = fiedler(&["eval", "--checkpoint", s(&ck), "--data", s(&data), "--mode", "global"]);
    assert_eq!(mismatch.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&mismatch.stderr).contains("mode"));
    assert_eq!(
        code(&["eval", "--checkpoint", s(&ck), "--data", s(&data), "--hidden", "7"]),
        1
    );
    ok(&["eval", "--checkpoint", s(&ck), "--data", s(&data), "--mode", "local", "--hidden", "6"]);
}

#[test]
fn sweep_rows_and_range_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = train_small(dir.path(), "local", 1);
    let ck = out.join("final.params");
    let csv_path = dir.path().join("sweep.csv");
    ok(&[
        "sweep",
        "--checkpoint",
        s(&ck),
        "--sizes",
        "5,6,7,8,9",
        "--per-size",
        "10",
        "--out",
        s(&csv_path),
    ]);
    let csv = fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "n,mean_l1,count,in_training_range");
    assert_eq!(lines.len(), 6);
    // Training data spans 5..=7.
    let flags: Vec<_> = lines[1..].iter().map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(flags, ["1", "1", "1", "0", "0"]);

    let x = dir.path().join("x.csv");
    let empty = ["sweep", "--checkpoint", s(&ck), "--sizes", "", "--out", s(&x)];
    assert_eq!(code(&empty), 1);
    let huge = ["sweep", "--checkpoint", s(&ck), "--sizes", "9,65", "--out", s(&x)];
    assert_eq!(code(&huge), 1);
}

#[test]
fn simulate_report_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = train_small(dir.path(), "local", 1);
    let ck = out.join("final.params");
    let trace = dir.path().join("trace.csv");
    let report = dir.path().join("report.csv");
    let stdout = ok(&[
        "simulate",
        "--checkpoint",
        s(&ck),
        "--n",
        "8",
        "--T",
        "8",
        "--trace",
        s(&trace),
        "--out",
        s(&report),
    ]);
    assert!(stdout.contains("true lambda2"));

    let rep = fs::read_to_string(&report).unwrap();
    let rows: Vec<_> = rep.lines().collect();
    assert_eq!(rows[0], "node,estimate,abs_error");
    assert!(rows[1].starts_with("true,"));
    assert_eq!(rows.len(), 2 + 8);

    let edges = stdout
        .lines()
        .find_map(|l| l.strip_prefix("graph: "))
        .and_then(|l| l.split("edges=").nth(1))
        .unwrap()
        .split(',')
        .filter(|e| !e.is_empty())
        .count();
    let t = fs::read_to_string(&trace).unwrap();
    assert_eq!(t.lines().count() - 1, 8 * 2 * edges);
}

#[test]
fn simulate_rejects_global_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let out = train_small(dir.path(), "global", 1);
    let r = fiedler(&["simulate", "--checkpoint", s(&out.join("final.params"))]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("local"));
}

#[test]
fn simulate_drop_edges() {
    let dir = tempfile::tempdir().unwrap();
    let out = train_small(dir.path(), "local", 1);
    let ck = out.join("final.params");
    let plain = ok(&["simulate", "--checkpoint", s(&ck), "--n", "6", "--T", "4"]);
    let edge = plain
        .lines()
        .find_map(|l| l.split("edges=").nth(1))
        .unwrap()
        .split(',')
        .next()
        .unwrap()
        .to_string();
    ok(&[
        "simulate",
        "--checkpoint",
        s(&ck),
        "--n",
        "6",
        "--T",
        "4",
        "--drop-edges",
        &edge,
        "--drop-from-round",
        "3",
    ]);
    let missing = ["simulate", "--checkpoint", s(&ck), "--n", "6", "--drop-edges", "0-0"];
    assert_ne!(code(&missing), 0);
}

#[test]
fn gradcheck_passes_and_detects_corruption() {
    let stdout = ok(&["gradcheck"]);
    assert!(stdout.contains("local"));
    assert!(stdout.contains("global"));
    assert!(stdout.contains("PASS"));
    for l in stdout.lines().filter(|l| l.contains("max relative error ") && !l.contains("instance")) {
        let v: f64 = l.rsplit(' ').next().unwrap().parse().unwrap();
        assert!(v <= 1e-5, "{l}");
    }
    assert_eq!(code(&["gradcheck", "--corrupt", "--instances", "1"]), 2);
}

#[test]
fn manifests_reproduce_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let first = gen(dir.path(), "d.txt", 30, 3);
    let second = dir.path().join("d2.txt");
    ok(&[
        "gen-data",
        "--config",
        s(&dir.path().join("d.txt.manifest")),
        "--out",
        s(&second),
    ]);
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());

    let run = train_small(dir.path(), "local", 2);
    let rerun = dir.path().join("rerun");
    ok(&[
        "train",
        "--config",
        s(&run.join("manifest.txt")),
        "--out-dir",
        s(&rerun),
    ]);
    for f in ["metrics.csv", "final.params", "epoch-001.params"] {
        assert_eq!(fs::read(run.join(f)).unwrap(), fs::read(rerun.join(f)).unwrap(), "{f}");
    }

    let sweep_a = dir.path().join("sa.csv");
    ok(&[
        "sweep",
        "--checkpoint",
        s(&run.join("final.params")),
        "--sizes",
        "6..8",
        "--per-size",
        "5",
        "--seed",
        "9",
        "--out",
        s(&sweep_a),
    ]);
    let sweep_b = dir.path().join("sb.csv");
    ok(&["sweep", "--config", s(&manifest(&sweep_a)), "--out", s(&sweep_b)]);
    assert_eq!(fs::read(&sweep_a).unwrap(), fs::read(&sweep_b).unwrap());
}

fn manifest(p: &Path) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

#[test]
fn usage_and_help_exit_codes() {
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["gen-data"]), 1);
    assert_eq!(code(&["gen-data", "--count", "3", "--out", "/dev/null/x", "--config", "/nonexistent.cfg"]), 1);
}
