use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use weekdbm::dbm::save_model;
use weekdbm::synthetic::two_group_weeks;
use weekdbm::DbmModel;

fn weekdbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weekdbm")).args(args).output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn synthetic_matrix(dir: &TempDir, rows: usize) -> PathBuf {
    let path = dir.path().join("weeks.csv");
    two_group_weeks(rows, 3).write_csv(fs::File::create(&path).unwrap()).unwrap();
    path
}

fn zero_model(dir: &TempDir) -> PathBuf {
    let path = dir.path().join("zero.json");
    save_model(&DbmModel::zeros(&[7, 7, 1]).unwrap(), fs::File::create(&path).unwrap()).unwrap();
    path
}

#[test]
fn ingest_writes_matrix() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("steps.csv");
    fs::write(&input, "subject_id,date,steps\ns1,2024-01-01,5000\ns1,2024-01-02,0\ns2,2024-01-10,\n").unwrap();
    let out = dir.path().join("weeks.csv");
    let o = weekdbm(&["ingest", path_str(&input), "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("after empty-week deletion:  1"));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("s1,2024-W01,1,0,0"));
}

#[test]
fn ingest_duplicate_names_line() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("steps.csv");
    fs::write(&input, "subject_id,date,steps\ns1,2024-01-01,5\ns1,2024-01-01,7\n").unwrap();
    let o = weekdbm(&["ingest", path_str(&input), "--out", path_str(&dir.path().join("w.csv"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn ingest_header_only_warns() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("steps.csv");
    fs::write(&input, "subject_id,date,steps\n").unwrap();
    let out = dir.path().join("w.csv");
    let o = weekdbm(&["ingest", path_str(&input), "--out", path_str(&out)]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning"));
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 1);
}

#[test]
fn train_rejects_zero_epochs_and_bad_dims() {
    let dir = TempDir::new().unwrap();
    let matrix = synthetic_matrix(&dir, 20);
    let out = dir.path().join("m.json");
    let o = weekdbm(&["train", path_str(&matrix), "--out", path_str(&out), "--dbm-epochs", "0"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = weekdbm(&["train", path_str(&matrix), "--out", path_str(&out), "--layer-dims", "6,7,1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn train_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let matrix = synthetic_matrix(&dir, 100);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = weekdbm(&["train", path_str(&matrix), "--out", path_str(out), "--seed", "1"]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains("(trained)"));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn heatmap_writes_table_and_image() {
    let dir = TempDir::new().unwrap();
    let model = zero_model(&dir);
    let out = dir.path().join("fig");
    let o = weekdbm(&["heatmap", path_str(&model), "--samples", "1", "--out", path_str(&out), "--cell-size", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.with_extension("csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "condition,mon,tue,wed,thu,fri,sat,sun,n_samples");
    assert!(lines[1].starts_with("on,") && lines[1].ends_with(",1"));
    assert!(lines[2].starts_with("off,"));
    let pgm = fs::read_to_string(out.with_extension("pgm")).unwrap();
    assert!(pgm.starts_with("P2\n14 4\n255\n"));
}

#[test]
fn heatmap_rejects_corrupt_model() {
    let dir = TempDir::new().unwrap();
    let model = dir.path().join("bad.json");
    fs::write(&model, "{\"version\": 1, \"weights\": ").unwrap();
    let o = weekdbm(&["heatmap", path_str(&model), "--out", path_str(&dir.path().join("fig"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn evaluate_zero_model_is_uniform() {
    let dir = TempDir::new().unwrap();
    let model = zero_model(&dir);
    let matrix = synthetic_matrix(&dir, 10);
    let o = weekdbm(&["evaluate", path_str(&model), path_str(&matrix), "--samples", "100"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let line = text.lines().find(|l| l.starts_with("exact log-likelihood per week")).unwrap();
    let value: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!((value + 7.0 * 2f64.ln()).abs() < 1e-6);
    assert!(text.contains("day,data,model"));
}

#[test]
fn evaluate_rejects_column_mismatch() {
    let dir = TempDir::new().unwrap();
    let model = dir.path().join("small.json");
    save_model(&DbmModel::zeros(&[3, 2, 1]).unwrap(), fs::File::create(&model).unwrap()).unwrap();
    let matrix = synthetic_matrix(&dir, 5);
    let o = weekdbm(&["evaluate", path_str(&model), path_str(&matrix)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn generate_writes_both_conditions() {
    let dir = TempDir::new().unwrap();
    let model = zero_model(&dir);
    let out = dir.path().join("samples.csv");
    let o = weekdbm(&["generate", path_str(&model), "--samples", "5", "--out", path_str(&out), "--seed", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<_> = text.lines().skip(1).collect();
    assert_eq!(lines.len(), 10);
    assert_eq!(lines.iter().filter(|l| l.starts_with("on,")).count(), 5);
}
