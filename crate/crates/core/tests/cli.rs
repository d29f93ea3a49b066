mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use convmr::data::Dataset;
use convmr::multirel::generate;

fn convmr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_convmr"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn body(o: &Output) -> Vec<String> {
    stdout(o)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn full_pipeline_on_toy_data() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("toy");
    common::write_toy_dir(&data);
    let before = snapshot(&data);
    let ds = Dataset::load(&data).unwrap();

    let out = convmr(&["stats", "--data", p(&data)]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("# command: stats\n# settings: "));
    let s = ds.stats();
    assert_eq!(
        body(&out),
        vec![
            "dataset,entities,relations,train,valid,test".to_string(),
            format!("toy,20,5,{},{},{}", s.train, s.valid, s.test),
        ]
    );

    let out = convmr(&["generate", "--data", p(&data)]);
    assert!(out.status.success());
    let lines = body(&out);
    assert_eq!(lines.len(), generate(&ds.train).len());
    assert!(lines.iter().any(|l| l.contains("r2,r3")));
    assert!(String::from_utf8_lossy(&out.stderr).contains("set_size,"));

    let ck = tmp.path().join("model.json");
    let log = tmp.path().join("log.csv");
    let out = convmr(&[
        "train",
        "--data",
        p(&data),
        "--checkpoint",
        p(&ck),
        "--out",
        p(&log),
        "--epochs",
        "3",
        "--k",
        "8",
        "--tau",
        "4",
        "--num-batches",
        "4",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let settings = stdout(&out);
    for field in [
        "\"lambda\"",
        "\"negatives_per_positive\"",
        "\"lr_decay_every\"",
        "\"seed\"",
    ] {
        assert!(settings.contains(field), "{field} missing from header");
    }
    let log_text = fs::read_to_string(&log).unwrap();
    let rows: Vec<&str> = log_text.lines().collect();
    assert!(rows[0].starts_with("# config: {"));
    assert_eq!(rows[1], "epoch,mean_loss,lr,seconds");
    assert_eq!(rows.len(), 5);

    let out = convmr(&[
        "evaluate",
        "--data",
        p(&data),
        "--checkpoint",
        p(&ck),
        "--threads",
        "2",
    ]);
    assert!(out.status.success());
    let rows = body(&out);
    assert_eq!(rows[0], "split,category,side,queries,mean_rank,hits_at_10");
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with(&format!("test,all,both,{},", 2 * ds.test.len())));

    let out = convmr(&[
        "attention",
        "--data",
        p(&data),
        "--checkpoint",
        p(&ck),
        "--relations",
        "r2,r3",
    ]);
    assert!(out.status.success());
    let rows = body(&out);
    assert_eq!(rows[0], "relation,weight");
    let total: f64 = rows[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12);

    let out = convmr(&["categories", "--data", p(&data)]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("relation,n_s,n_o,category"));
    assert!(text.contains("split,category,share_percent"));

    let out = convmr(&["categories", "--data", p(&data), "--checkpoint", p(&ck)]);
    assert!(out.status.success());
    assert!(body(&out).iter().any(|l| l.contains(",both,")));

    assert_eq!(snapshot(&data), before, "input files changed");
}

#[test]
fn training_log_is_reproducible_and_flags_override_config() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("toy");
    common::write_toy_dir(&data);
    let cfg = tmp.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"epochs": 4, "k": 8, "tau": 2, "num_batches": 5, "seed": 1}"#,
    )
    .unwrap();
    let run = |name: &str| {
        let log = tmp.path().join(name);
        let out = convmr(&[
            "train",
            "--data",
            p(&data),
            "--config",
            p(&cfg),
            "--seed",
            "7",
            "--epochs",
            "2",
            "--out",
            p(&log),
        ]);
        assert!(out.status.success());
        (stdout(&out), fs::read_to_string(log).unwrap())
    };
    let (head_a, log_a) = run("a.csv");
    let (head_b, log_b) = run("b.csv");
    assert_eq!(log_a, log_b);
    assert_eq!(head_a.replace("a.csv", "b.csv"), head_b);
    assert!(log_a.contains("\"seed\":7"));
    assert_eq!(log_a.lines().count(), 4);
}

#[test]
fn gradcheck_reports_through_exit_code() {
    let out = convmr(&[
        "gradcheck",
        "--k",
        "8",
        "--tau",
        "4",
        "--encoder",
        "attn_average",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = body(&out);
    assert_eq!(rows.len(), 4);
    assert!(rows[1..].iter().all(|r| r.ends_with(",true")));

    let out = convmr(&[
        "gradcheck",
        "--encoder",
        "gru",
        "--n",
        "2",
        "--tolerance",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn error_exit_codes() {
    assert_eq!(convmr(&["stats", "--bogus"]).status.code(), Some(1));
    assert_eq!(
        convmr(&["stats", "--data", "/nonexistent/dir"])
            .status
            .code(),
        Some(2)
    );
    let tmp = tempfile::tempdir().unwrap();
    common::write_toy_dir(tmp.path());
    let missing = tmp.path().join("none.json");
    let out = convmr(&[
        "evaluate",
        "--data",
        p(tmp.path()),
        "--checkpoint",
        p(&missing),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = convmr(&["train", "--data", p(tmp.path()), "--num-batches", "0"]);
    assert_eq!(out.status.code(), Some(1));
}
