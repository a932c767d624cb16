use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coded-compute"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn tradeoff_k18_third_storage() {
    let o = run(&["tradeoff", "--K", "18", "--mu", "1/3", "--N", "180"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("q,D,L_ach,L_lb,gap"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 16);
    assert_eq!(rows[0][0], 3.0);
    assert!(rows.iter().all(|r| r[4] <= 4.2));
}

#[test]
fn tradeoff_json_and_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.json");
    let o = run(&[
        "tradeoff",
        "--K",
        "14",
        "--mu",
        "1/2",
        "--N",
        "840",
        "--format",
        "json",
        "--rational",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let points = doc["points"].as_array().unwrap();
    assert_eq!(points.first().unwrap()["L_ach"], "420");
    assert_eq!(points.last().unwrap()["L_ach"], "60");
}

#[test]
fn preset_checks() {
    for preset in [
        "min-bandwidth-example",
        "min-latency-example",
        "sec4-example",
    ] {
        let o = run(&["simulate", "--preset", preset, "--check"]);
        assert!(o.status.success(), "{preset}: {}", stderr(&o));
        let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(report["all_correct"], true);
    }
    let o = run(&["example", "--preset", "k18-third-storage", "--check"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&["tradeoff", "--preset", "k14-half-storage", "--check"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn simulate_writes_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("log.jsonl");
    let o = run(&[
        "simulate",
        "--K",
        "6",
        "--q",
        "4",
        "--mu",
        "1/2",
        "--m",
        "20",
        "--n",
        "4",
        "--N",
        "12",
        "--seed",
        "3",
        "--trials",
        "50",
        "--transcript",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["mean_load"], "21/5");
    assert_eq!(report["trials"].as_array().unwrap().len(), 50);
    let log = std::fs::read_to_string(&path).unwrap();
    let symbols: u64 = log
        .lines()
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["symbols"]
                .as_u64()
                .unwrap()
        })
        .sum();
    assert_eq!(symbols, 84);
}

#[test]
fn plan_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plan.json");
    let o = run(&[
        "plan",
        "--preset",
        "min-bandwidth-example",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&["verify-plan", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["subsets_checked"], 1);
    assert_eq!(report["exhaustive"], true);

    let o = run(&["verify-plan", path.to_str().unwrap(), "--sample", "40"]);
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["exhaustive"], false);

    // no spare rows here, so dropping a batch breaks decoding
    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    doc["batches"].as_array_mut().unwrap().remove(0);
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, doc.to_string()).unwrap();
    let o = run(&["verify-plan", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    // garbage: rejected as invalid input
    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{\"format_version\": 1").unwrap();
    let o = run(&["verify-plan", garbage.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validation_exit_codes() {
    let o = run(&[
        "simulate", "--K", "6", "--q", "4", "--mu", "1/2", "--m", "20", "--n", "4", "--N", "10",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("output-divisibility"));
    let o = run(&[
        "simulate", "--K", "6", "--q", "1", "--mu", "1/2", "--m", "20", "--n", "4", "--N", "12",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("wait-range"));
    let o = run(&["tradeoff", "--K", "6", "--mu", "0.1.2", "--N", "12"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["example", "--preset", "missing"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn matrix_file_and_table_latency() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let entries: Vec<u16> = (0..48).map(|i| (i * 37 % 251) as u16).collect();
    std::fs::write(
        &a,
        serde_json::json!({"rows": 12, "cols": 4, "entries": entries}).to_string(),
    )
    .unwrap();
    let o = run(&[
        "simulate",
        "--preset",
        "min-bandwidth-example",
        "--matrix-file",
        a.to_str().unwrap(),
        "--check",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    let table = dir.path().join("g.json");
    std::fs::write(&table, r#"{"muN": "2", "g": [{"K": 4, "q": 2, "g": "19/12"}, {"K": 4, "q": 3, "g": "2"}, {"K": 4, "q": 4, "g": "37/12"}]}"#).unwrap();
    let spec = format!("table:{}", table.display());
    let o = run(&[
        "tradeoff",
        "--K",
        "4",
        "--mu",
        "1/2",
        "--N",
        "4",
        "--latency",
        &spec,
        "--rational",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("2,19/6,2,"));
    assert!(text.contains("4,37/6,1,"));
}
