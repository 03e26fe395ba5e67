// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use exactseg::simlab::{replicate_seed, simulate_series, SimDesign};
use exactseg::{Analysis, ModelHyper, PriorSpec, SeriesData};
use serde_json::Value;
use tempfile::TempDir;

fn exactseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exactseg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_series(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn lines_of(values: &[f64]) -> String {
    let mut s = String::from("value\n");
    for v in values {
        s.push_str(&format!("{v}\n"));
    }
    s
}

/// Rows of a TSV (header skipped) split into fields.
fn tsv(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split('\t').map(str::to_string).collect())
        .collect()
}

fn f(s: &str) -> f64 {
    s.parse().unwrap()
}

fn u(s: &str) -> usize {
    s.parse().unwrap()
}

fn simulated() -> Vec<f64> {
    let d = SimDesign::default();
    simulate_series(&d, 10.0, replicate_seed(d.seed, 10.0, 0))
        .unwrap()
        .values()
        .to_vec()
}

#[test]
fn analyze_round_trips_bit_for_bit() {
    let tmp = TempDir::new().unwrap();
    let values = simulated();
    let input = write_series(tmp.path(), "y.txt", &lines_of(&values));
    let out = tmp.path().join("out");
    let o = exactseg(&[
        "analyze",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());

    let a = Analysis::new(
        SeriesData::poisson(&values).unwrap(),
        ModelHyper::poisson(1.0, 1.0).unwrap(),
        PriorSpec::uniform_given_k(20).unwrap(),
    )
    .unwrap();
    let report = a.report().unwrap();
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["seg_prob_threshold"].as_f64().unwrap(), 1e-12);
    assert_eq!(doc["kmax"], 20);
    let selected = doc["selected_k"].as_u64().unwrap() as usize;
    assert_eq!(selected, report.k_icl);
    assert_eq!(selected, 7);
    for (row, want) in doc["dimensions"].as_array().unwrap().iter().zip(&report.dimensions) {
        assert_eq!(row["log_pyk"].as_f64().unwrap().to_bits(), want.log_pyk.to_bits());
        assert_eq!(row["icl_k"].as_f64().unwrap().to_bits(), want.icl_k.to_bits());
        assert_eq!(row["bic_m"].as_f64().unwrap().to_bits(), want.bic_m.to_bits());
    }

    let summaries: Vec<_> = (1..=20).map(|k| a.summary(k, 0.95).unwrap()).collect();
    for row in tsv(&out.join("changepoint_any.tsv")) {
        let (k, t) = (u(&row[0]), u(&row[1]));
        assert_eq!(
            f(&row[2]).to_bits(),
            summaries[k - 1].changepoints.any()[t - 1].to_bits()
        );
    }
    for row in tsv(&out.join("mean_signal.tsv")) {
        let (k, t) = (u(&row[0]), u(&row[1]));
        assert_eq!(f(&row[2]).to_bits(), summaries[k - 1].mean_signal[t - 1].to_bits());
    }
    let per_k = tsv(&out.join("changepoints_K007.tsv"));
    assert_eq!(per_k.len(), 7 * 150);
    for row in per_k {
        let (rank, t) = (u(&row[0]), u(&row[1]));
        assert_eq!(f(&row[2]).to_bits(), summaries[6].changepoints.at(rank, t).to_bits());
    }
    let seg = tsv(&out.join("segments_K007.tsv"));
    let kept: BTreeMap<(usize, usize), f64> = seg.iter().map(|r| ((u(&r[1]), u(&r[2])), f(&r[3]))).collect();
    for (t1, t2, p) in summaries[6].seg_prob.iter() {
        match kept.get(&(t1, t2)) {
            Some(q) => assert_eq!(q.to_bits(), p.to_bits()),
            None => assert!(p < 1e-12),
        }
    }
    let intervals = tsv(&out.join("intervals_K007.tsv"));
    assert_eq!(intervals.len(), 6);
    for (row, ci) in intervals.iter().zip(&summaries[6].cred_intervals) {
        assert_eq!(u(&row[0]), ci.rank);
        assert_eq!((u(&row[1]), u(&row[2])), (ci.interval.start, ci.interval.end));
        assert_eq!(f(&row[3]).to_bits(), ci.interval.mass.to_bits());
    }
}

#[test]
fn analyze_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let input = write_series(tmp.path(), "y.txt", &lines_of(&simulated()[..60]));
    let mut dirs = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let o = exactseg(&[
            "analyze",
            "--input",
            input.to_str().unwrap(),
            "--prior",
            "homogeneous",
            "--kmax",
            "8",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        dirs.push(out);
    }
    let mut names: Vec<_> = std::fs::read_dir(&dirs[0])
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 8 + 5);
    for name in names {
        assert_eq!(
            std::fs::read(dirs[0].join(&name)).unwrap(),
            std::fs::read(dirs[1].join(&name)).unwrap()
        );
    }
}

#[test]
fn single_point_series() {
    let tmp = TempDir::new().unwrap();
    let input = write_series(tmp.path(), "y.txt", "4\n");
    let out = tmp.path().join("out");
    let o = exactseg(&[
        "analyze",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(doc["kmax"], 1);
    assert_eq!(doc["selected_k"], 1);
    assert_eq!(doc["dimensions"].as_array().unwrap().len(), 1);
    assert_eq!(doc["dimensions"][0]["entropy"].as_f64().unwrap(), 0.0);
    assert_eq!(
        tsv(&out.join("changepoints_K001.tsv")),
        vec![vec!["1", "1", "1.0000000000000000e0"]]
    );
    assert_eq!(
        tsv(&out.join("segments_K001.tsv")),
        vec![vec!["1", "1", "2", "1.0000000000000000e0"]]
    );
    // posterior mean (alpha + y) / (beta + 1)
    assert_eq!(f(&tsv(&out.join("mean_signal.tsv"))[0][2]), 2.5);
}

#[test]
fn gaussian_model_runs() {
    let tmp = TempDir::new().unwrap();
    let input = write_series(tmp.path(), "y.txt", "-0.5\n0.1\n0.3\n5.2\n4.9\n5.4\n5.0\n");
    let out = tmp.path().join("out");
    let o = exactseg(&[
        "analyze",
        "--input",
        input.to_str().unwrap(),
        "--model",
        "gaussian",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(doc["hyper"]["model"], "gaussian");
    assert_eq!(doc["best_changepoints"], serde_json::json!([4]));
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();

    let o = exactseg(&["analyze", "--input", "/nonexistent/series.txt", "--out", out]);
    assert_eq!(o.status.code(), Some(2));

    let bad = write_series(tmp.path(), "bad.txt", "y\n1\n2\n\nthree\n");
    let o = exactseg(&["analyze", "--input", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains(":5:"));

    let neg = write_series(tmp.path(), "neg.txt", "1\n-2\n3\n");
    let o = exactseg(&["analyze", "--input", neg.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(3));
    let frac = write_series(tmp.path(), "frac.txt", "1\n2.5\n3\n");
    let o = exactseg(&["analyze", "--input", frac.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(3));
    let o = exactseg(&[
        "analyze",
        "--input",
        frac.to_str().unwrap(),
        "--model",
        "gaussian",
        "--out",
        out,
    ]);
    assert_eq!(o.status.code(), Some(0));

    let long = write_series(tmp.path(), "long.txt", &"1\n".repeat(5001));
    let o = exactseg(&["analyze", "--input", long.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(4));

    let short = write_series(tmp.path(), "short.txt", "1\n2\n");
    let o = exactseg(&[
        "analyze",
        "--input",
        short.to_str().unwrap(),
        "--kmax",
        "3",
        "--out",
        out,
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn oracle_check_reports_agreement() {
    let tmp = TempDir::new().unwrap();
    let input = write_series(tmp.path(), "y.txt", "3\n3\n3\n9\n9\n1\n1\n1\n");
    for prior in ["uniform", "homogeneous"] {
        let o = exactseg(&["oracle-check", "--input", input.to_str().unwrap(), "--prior", prior]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let v: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["passed"], true);
        assert!(v["max_deviation"].as_f64().unwrap() < 1e-9);
        assert_eq!(v["detail"]["dimensions_checked"], 8);
    }
    let long = write_series(tmp.path(), "long.txt", &"1\n".repeat(20));
    let o = exactseg(&["oracle-check", "--input", long.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn simulate_writes_seeded_tables() {
    let tmp = TempDir::new().unwrap();
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let o = exactseg(&[
            "simulate",
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "7",
            "--replicates",
            "3",
            "--lambda-grid",
            "0,10",
            "--alpha",
            "1",
            "--kmax",
            "10",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("a");
    let b = run("b");
    for name in ["recovery.tsv", "kl.tsv"] {
        assert_eq!(
            std::fs::read(a.join(name)).unwrap(),
            std::fs::read(b.join(name)).unwrap()
        );
    }
    let rec = tsv(&a.join("recovery.tsv"));
    assert_eq!(rec.len(), 2 * 5);
    assert!(rec.iter().all(|r| r[0] == "7" && r[5] == "3"));
    let kl = tsv(&a.join("kl.tsv"));
    assert_eq!(kl.len(), 2 * 10);
    assert!(kl.iter().all(|r| r[0] == "7"));
}
