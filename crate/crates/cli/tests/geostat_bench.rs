mod common;

use std::fs;

use common::*;

fn ok(args: &[&str]) -> String {
    let out = hpcready(args);
    assert!(out.status.success(), "{args:?}: {}", stderr(&out));
    stdout(&out)
}

#[test]
fn generate_model_predict() {
    let dir = tempfile::tempdir().unwrap();
    let p = |f: &str| dir.path().join(f).to_str().unwrap().to_string();
    ok(&[
        "geostat",
        "generate",
        "--n",
        "120",
        "--sigma2",
        "1",
        "--beta",
        "0.1",
        "--nu",
        "0.5",
        "--seed",
        "3",
        "--out",
        &p("d.csv"),
    ]);
    let text = fs::read_to_string(p("d.csv")).unwrap();
    assert_eq!(text.lines().count(), 121);
    assert_eq!(text.lines().next(), Some("x,y,z"));
    // Same seed, same bytes.
    assert_eq!(ok(&["geostat", "generate", "--n", "120", "--seed", "3"]), text);

    let fit: serde_json::Value =
        serde_json::from_str(&ok(&["geostat", "model", "--data", &p("d.csv"), "--max-iters", "10"])).unwrap();
    assert_eq!(fit["iterations"], 10);
    assert!(fit["log_likelihood"].as_f64().unwrap().is_finite());
    let tlr: serde_json::Value = serde_json::from_str(&ok(&[
        "geostat",
        "model",
        "--data",
        &p("d.csv"),
        "--max-iters",
        "5",
        "--nb",
        "40",
        "--tol",
        "1e-9",
    ]))
    .unwrap();
    assert!(tlr["sigma2"].as_f64().unwrap() > 0.0);

    // Kriging at the observed sites reproduces the data (nugget 0).
    fs::write(p("q.csv"), text.lines().take(6).map(|l| format!("{l}\n")).collect::<String>()).unwrap();
    ok(&["geostat", "predict", "--data", &p("d.csv"), "--query", &p("q.csv"), "--out", &p("z.csv")]);
    let pred = fs::read_to_string(p("z.csv")).unwrap();
    for (a, b) in text.lines().skip(1).zip(pred.lines().skip(1)) {
        let za: f64 = a.rsplit(',').next().unwrap().parse().unwrap();
        let zb: f64 = b.rsplit(',').next().unwrap().parse().unwrap();
        assert!((za - zb).abs() < 1e-6, "{a} vs {b}");
    }

    let bad = hpcready(&["geostat", "model", "--data", &p("d.csv"), "--nb", "7"]);
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(hpcready(&["geostat", "generate", "--n", "5", "--sigma2", "-1"]).status.code(), Some(2));
    assert_eq!(hpcready(&["geostat", "model", "--data", "/no/file.csv"]).status.code(), Some(2));
}

#[test]
fn bench_run_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let p = |f: &str| dir.path().join(f).to_str().unwrap().to_string();
    fs::write(p("plan.csv"), "operation,mode,n,ts\ngeneration,dense,64,0\nmodeling,tlr,64,16\nprediction,dense,64,0\n")
        .unwrap();
    ok(&["bench", "run", "--plan", &p("plan.csv"), "--reps", "3", "--label", "native", "--out", &p("a.json")]);
    ok(&["bench", "run", "--plan", &p("plan.csv"), "--reps", "2", "--label", "container", "--out", &p("b.json")]);
    let run: serde_json::Value = serde_json::from_str(&fs::read_to_string(p("a.json")).unwrap()).unwrap();
    assert_eq!(run["runs"][0]["times_s"].as_array().unwrap().len(), 3);
    assert_eq!(run["runs"][1]["iterations"], 10);

    let same = ok(&["bench", "compare", "--baseline", &p("a.json"), "--candidate", &p("a.json")]);
    let mut lines = same.lines();
    assert_eq!(lines.next(), Some("operation,mode,n,ts,baseline_mean_s,candidate_mean_s,variation_pct"));
    assert!(lines.all(|l| l.ends_with(",0")), "{same}");

    let cross = ok(&["bench", "compare", "--baseline", &p("a.json"), "--candidate", &p("b.json"), "--format", "json"]);
    let report: serde_json::Value = serde_json::from_str(&cross).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 3);
    assert!(report["convention"].is_string());

    fs::write(p("other.csv"), "operation,mode,n,ts\ngeneration,dense,32,0\n").unwrap();
    ok(&["bench", "run", "--plan", &p("other.csv"), "--reps", "1", "--label", "x", "--out", &p("c.json")]);
    let mismatch = hpcready(&["bench", "compare", "--baseline", &p("a.json"), "--candidate", &p("c.json")]);
    assert_eq!(mismatch.status.code(), Some(2));
    assert!(stderr(&mismatch).contains("plan mismatch"));

    fs::write(p("bad.csv"), "operation,mode,n,ts\nmodeling,tlr,64,10\ngeneration,dense,16,0\n").unwrap();
    let partial =
        hpcready(&["bench", "run", "--plan", &p("bad.csv"), "--reps", "1", "--label", "x", "--out", &p("d.json")]);
    assert_eq!(partial.status.code(), Some(1));
    let run: serde_json::Value = serde_json::from_str(&fs::read_to_string(p("d.json")).unwrap()).unwrap();
    assert!(run["runs"][0]["error"].is_string());
    assert!(run["runs"][1]["error"].is_null());
}
