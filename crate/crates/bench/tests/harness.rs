use hpcready_bench::*;
use proptest::prelude::*;

fn quick(reps: usize) -> BenchOptions {
    BenchOptions { repetitions: reps, warmup: 0, seed: 11, ..Default::default() }
}

fn cell(op: Operation, mode: Mode, n: usize, ts: usize) -> PlanCell {
    PlanCell::new(op, mode, n, ts)
}

/// A run set whose single cell has the given times.
fn synthetic(label: &str, times: &[f64]) -> RunSet {
    RunSet {
        label: label.into(),
        options: BenchOptions::default(),
        runs: vec![BenchRun {
            cell: cell(Operation::Modeling, Mode::Dense, 400, 0),
            env_label: label.into(),
            repetitions: times.len(),
            times_s: times.to_vec(),
            output_digest: Some("ab".into()),
            iterations: Some(10),
            error: None,
        }],
    }
}

#[test]
fn ten_repetitions_give_ten_times() {
    let set = run_benchmark(&[cell(Operation::Generation, Mode::Dense, 64, 0)], &quick(10), "native").unwrap();
    let run = &set.runs[0];
    assert_eq!(run.times_s.len(), 10);
    assert!(run.times_s.iter().all(|t| *t > 0.0));
    let mean = run.times_s.iter().sum::<f64>() / 10.0;
    assert!((run.mean_s().unwrap() - mean).abs() <= 1e-15 * mean);
}

#[test]
fn single_repetition_mean_is_the_sample() {
    let set = run_benchmark(&[cell(Operation::Prediction, Mode::Dense, 50, 0)], &quick(1), "native").unwrap();
    assert_eq!(set.runs[0].mean_s(), Some(set.runs[0].times_s[0]));
}

#[test]
fn warmup_is_discarded() {
    let opts = BenchOptions { warmup: 2, ..quick(3) };
    let set = run_benchmark(&[cell(Operation::Generation, Mode::Dense, 32, 0)], &opts, "native").unwrap();
    assert_eq!(set.runs[0].times_s.len(), 3);
}

#[test]
fn failing_cell_is_isolated() {
    let plan = [
        cell(Operation::Generation, Mode::Dense, 60, 0),
        cell(Operation::Modeling, Mode::Tlr, 100, 30),
        cell(Operation::Prediction, Mode::Tlr, 60, 20),
    ];
    let set = run_benchmark(&plan, &quick(2), "native").unwrap();
    assert!(!set.runs[0].failed());
    assert!(set.runs[1].failed());
    assert!(set.runs[1].error.as_deref().unwrap().contains("does not divide"));
    assert!(set.runs[1].times_s.is_empty() && set.runs[1].output_digest.is_none());
    assert!(!set.runs[2].failed(), "{:?}", set.runs[2].error);

    let report = compare_runs(&set, &set).unwrap();
    assert!(report.rows[1].failed());
    let csv = emit_report(&report, ReportFormat::Csv);
    assert_eq!(csv.lines().nth(2).unwrap(), "modeling,tlr,100,30,,,failed");
}

#[test]
fn modeling_runs_the_configured_iterations() {
    for iters in [3, 10] {
        let opts = BenchOptions { mle_iterations: iters, ..quick(1) };
        let plan = [cell(Operation::Modeling, Mode::Dense, 60, 0), cell(Operation::Modeling, Mode::Tlr, 60, 20)];
        let set = run_benchmark(&plan, &opts, "native").unwrap();
        for r in &set.runs {
            assert_eq!(r.iterations, Some(iters), "{:?}", r.error);
        }
    }
}

#[test]
fn outputs_are_bitwise_equal_across_labels() {
    let plan = [
        cell(Operation::Generation, Mode::Tlr, 64, 16),
        cell(Operation::Modeling, Mode::Dense, 48, 0),
        cell(Operation::Prediction, Mode::Dense, 48, 0),
    ];
    let native = run_benchmark(&plan, &quick(2), "native").unwrap();
    let container = run_benchmark(&plan, &quick(3), "container").unwrap();
    for (a, b) in native.runs.iter().zip(&container.runs) {
        assert!(a.output_digest.is_some());
        assert_eq!(a.output_digest, b.output_digest);
    }
    let report = compare_runs(&native, &container).unwrap();
    assert_eq!(report.rows.len(), 3);
    assert_eq!(report.baseline_label, "native");

    let other_seed = run_benchmark(&plan, &BenchOptions { seed: 12, ..quick(1) }, "container").unwrap();
    assert_ne!(other_seed.runs[1].output_digest, native.runs[1].output_digest);
    assert!(matches!(compare_runs(&native, &other_seed), Err(CompareError::PlanMismatch(_))));

    let mut tampered = container.clone();
    tampered.runs[2].output_digest = Some("00".into());
    assert!(matches!(compare_runs(&native, &tampered), Err(CompareError::OutputMismatch { .. })));
}

#[test]
fn self_comparison_is_zero() {
    let plan = [cell(Operation::Generation, Mode::Dense, 40, 0), cell(Operation::Prediction, Mode::Tlr, 40, 10)];
    let set = run_benchmark(&plan, &quick(3), "native").unwrap();
    let report = compare_runs(&set, &set).unwrap();
    for row in &report.rows {
        assert_eq!(row.variation_pct, Some(0.0));
        assert_eq!(format!("{:.2}%", row.variation_pct.unwrap()), "0.00%");
    }
}

#[test]
fn slower_candidate_is_negative() {
    let report = compare_runs(&synthetic("native", &[2.0, 2.0]), &synthetic("container", &[2.02, 2.02])).unwrap();
    let v = report.rows[0].variation_pct.unwrap();
    assert!((v - -1.0).abs() < 1e-12, "{v}");
    assert_eq!(format!("{v:.1}"), "-1.0");
}

#[test]
fn mismatched_plans_rejected() {
    let a = synthetic("a", &[1.0]);
    let mut b = synthetic("b", &[1.0]);
    b.runs[0].cell.n = 800;
    assert!(matches!(compare_runs(&a, &b), Err(CompareError::PlanMismatch(_))));
    let mut c = a.clone();
    c.runs.push(c.runs[0].clone());
    assert!(matches!(compare_runs(&a, &c), Err(CompareError::PlanMismatch(_))));
    let mut d = synthetic("d", &[1.0]);
    d.options.mle_iterations = 20;
    assert!(matches!(compare_runs(&a, &d), Err(CompareError::PlanMismatch(_))));
}

proptest! {
    /// With `r = t_b / t_a`: `v_ab = 100(1 − r)` and `v_ba = 100(1 − 1/r)`,
    /// so `v_ab = −v_ba / (1 − v_ba/100)`.
    #[test]
    fn swapping_roles_inverts_the_variation(ta in 1e-3f64..10.0, tb in 1e-3f64..10.0) {
        let ab = compare_runs(&synthetic("a", &[ta]), &synthetic("b", &[tb])).unwrap().rows[0].variation_pct.unwrap();
        let ba = compare_runs(&synthetic("b", &[tb]), &synthetic("a", &[ta])).unwrap().rows[0].variation_pct.unwrap();
        let r = tb / ta;
        prop_assert!((ab - 100.0 * (1.0 - r)).abs() <= 1e-9 * (1.0 + ab.abs()));
        let implied = -ba / (1.0 - ba / 100.0);
        prop_assert!((ab - implied).abs() <= 1e-9 * (1.0 + ab.abs()), "{ab} vs {implied}");
    }
}

#[test]
fn empty_report_is_header_only() {
    let empty = ComparisonReport { baseline_label: "a".into(), candidate_label: "b".into(), rows: vec![] };
    assert_eq!(emit_report(&empty, ReportFormat::Csv), format!("{CSV_HEADER}\n"));
    let json: serde_json::Value = serde_json::from_str(&emit_report(&empty, ReportFormat::Json)).unwrap();
    assert_eq!(json["rows"], serde_json::json!([]));
    assert!(json["convention"].as_str().unwrap().contains("positive means the candidate is faster"));
}

#[test]
fn csv_and_json_carry_the_same_values() {
    let report = compare_runs(&synthetic("a", &[0.1, 0.2, 0.3]), &synthetic("b", &[0.3, 0.1, 0.15])).unwrap();
    let csv_text = emit_report(&report, ReportFormat::Csv);
    assert_eq!(csv_text.lines().count(), 2);
    let json: serde_json::Value = serde_json::from_str(&emit_report(&report, ReportFormat::Json)).unwrap();

    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>().join(","), CSV_HEADER);
    let rec = rdr.records().next().unwrap().unwrap();
    let row = &json["rows"][0];
    for (i, key) in CSV_HEADER.split(',').enumerate() {
        match &row[key] {
            serde_json::Value::String(s) => assert_eq!(&rec[i], s),
            serde_json::Value::Number(n) => assert_eq!(rec[i].parse::<f64>().unwrap(), n.as_f64().unwrap(), "{key}"),
            other => panic!("{key}: {other}"),
        }
    }
    assert_eq!(row["variation_pct"].as_f64(), report.rows[0].variation_pct);
}

#[test]
fn flop_columns_only_for_modeling() {
    let report = compare_runs(&synthetic("a", &[1.0]), &synthetic("b", &[2.0])).unwrap();
    let text = emit_report_with(&report, ReportFormat::Csv, true);
    let line = text.lines().nth(1).unwrap();
    let expected = 400f64.powi(3) / 3.0 / 1e9;
    assert!(line.ends_with(&format!(",{},{}", expected, expected / 2.0)), "{line}");
    assert!(text.starts_with(&format!("{CSV_HEADER},baseline_gflops,candidate_gflops\n")));
}

#[test]
fn run_file_round_trip() {
    let set = run_benchmark(&[cell(Operation::Generation, Mode::Dense, 16, 0)], &quick(2), "native").unwrap();
    assert_eq!(RunSet::from_json(&set.to_json()).unwrap(), set);
    assert!(RunSet::from_json("{}").is_err());
}

#[test]
fn zero_repetitions_rejected() {
    assert!(run_benchmark(&[], &quick(0), "x").is_err());
}
