//! End-to-end runs of the `hdc-seizure` binary on a tiny synthetic corpus.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_hdc-seizure");

fn demo_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/demo.conf")
}

/// Runs the binary on the demo config with every path inside `root` and a
/// smaller corpus.
fn run(root: &Path, args: &[&str]) -> Output {
    let sets = [
        format!("paths.data_root={}", root.join("raw").display()),
        format!("paths.work_dir={}", root.join("dataset").display()),
        format!("paths.results_dir={}", root.join("results").display()),
        "synth.subjects=2".into(),
        "synth.duration_sec=600".into(),
        "dataset.post_exclusion_sec=120".into(),
        "encoder.dim=1024".into(),
    ];
    let mut cmd = Command::new(BIN);
    cmd.env_remove("HDC_SEIZURE_DATA").arg("--config").arg(demo_config());
    for s in &sets {
        cmd.arg("--set").arg(s);
    }
    cmd.args(args).output().expect("binary runs")
}

fn ok(out: Output) -> String {
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{stdout}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    stdout
}

fn prepare(root: &Path) {
    ok(run(root, &["synth"]));
    ok(run(root, &["featurize"]));
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn synth_featurize_train_report() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    prepare(root);
    assert!(root.join("raw/annotations.csv").is_file());
    assert!(root.join("dataset/syn01/seiz1.csv").is_file());

    let again = ok(run(root, &["featurize"]));
    assert!(again.contains("up to date"), "{again}");

    let stdout = ok(run(root, &["train", "--strategy", "2C", "--strategy", "MCri"]));
    assert!(stdout.contains("2C,2,"), "{stdout}");
    let exp = root.join("results/demo");
    for s in ["2C", "MCri"] {
        let (h, rows) = read_csv(&exp.join(s).join("per_fold.csv"));
        assert_eq!(rows.len(), 4, "{s}: two subjects with two seizures each");
        let f1 = column(&h, "f1de_mean");
        assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r[f1].parse::<f64>().unwrap())));
        assert!(exp.join(s).join("models/syn01/seiz1.hdm").is_file());
        assert!(exp.join(s).join("predictions/syn02/seiz2.csv").is_file());
    }
    assert!(exp.join("manifest.json").is_file());

    // report means are the means of the per-subject rows
    ok(run(root, &["report"]));
    let (rh, report) = read_csv(&exp.join("report.csv"));
    for row in &report {
        let s = &row[column(&rh, "strategy")];
        let (sh, subjects) = read_csv(&exp.join(s).join("per_subject.csv"));
        let vals: Vec<f64> = subjects.iter().map(|r| r[column(&sh, "f1de_mean")].parse().unwrap()).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let reported: f64 = row[column(&rh, "f1de_mean")].parse().unwrap();
        assert!((mean - reported).abs() < 1e-12, "{s}: {mean} vs {reported}");
        assert_eq!(row[column(&rh, "subjects")], vals.len().to_string());
    }

    // the per-subject means are fold means of per_fold.csv
    let (fh, folds) = read_csv(&exp.join("2C/per_fold.csv"));
    let (sh, subjects) = read_csv(&exp.join("2C/per_subject.csv"));
    for row in &subjects {
        let subj = &row[column(&sh, "subject")];
        let vals: Vec<f64> = folds
            .iter()
            .filter(|r| &r[column(&fh, "subject")] == subj)
            .map(|r| r[column(&fh, "f1de_mean")].parse().unwrap())
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let got: f64 = row[column(&sh, "f1de_mean")].parse().unwrap();
        assert!((mean - got).abs() < 1e-12);
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    prepare(root);
    let a = root.join("a");
    let b = root.join("b");
    ok(run(root, &["--jobs", "3", "train", "--strategy", "On+-", "--out", a.to_str().unwrap()]));
    ok(run(root, &["--jobs", "1", "train", "--strategy", "On+-", "--out", b.to_str().unwrap()]));
    for rel in ["On+-/per_fold.csv", "On+-/per_subject.csv", "On+-/predictions/syn01/seiz1.csv", "On+-/models/syn02/seiz2.hdm"] {
        let x = std::fs::read(a.join(rel)).unwrap();
        let y = std::fs::read(b.join(rel)).unwrap();
        assert!(x == y, "{rel} differs between runs");
    }
}

#[test]
fn unknown_strategy_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["train", "--strategy", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for tag in ["2C", "2C+", "2C+-", "MC", "MCr", "MCc", "MCri", "On+", "On+-"] {
        assert!(err.contains(tag), "{tag} missing from: {err}");
    }
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["--set", "encoder.dimension=5", "train"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn evaluate_scores_a_predictions_file() {
    // truth blocks [10, 20] and [40, 50]; predicted [12, 15], [18, 22], [60, 65]
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("p.csv");
    let mut text = String::from("truth,pred\n");
    for i in 0..80 {
        let t = (10..=20).contains(&i) || (40..=50).contains(&i);
        let p = (12..=15).contains(&i) || (18..=22).contains(&i) || (60..=65).contains(&i);
        text.push_str(&format!("{},{}\n", t as u8, p as u8));
    }
    std::fs::write(&path, text).unwrap();
    let stdout = ok(run(tmp.path(), &["evaluate", "--no-postprocess", path.to_str().unwrap()]));
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let ep = &v["episode"];
    assert_eq!(ep["counts"]["tp"], 1);
    assert_eq!(ep["counts"]["fp"], 1);
    assert_eq!(ep["counts"]["fn_"], 1);
    assert_eq!(ep["f1"], 0.5);
    // duration: 4 + 3 overlapping samples out of 22 true and 15 predicted
    let du = &v["duration"];
    assert_eq!(du["counts"]["tp"], 7);
    assert_eq!(du["counts"]["fp"], 8);
    assert_eq!(du["counts"]["fn_"], 15);
}
