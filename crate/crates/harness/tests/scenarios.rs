use loyalty_harness::table::Cell;
use loyalty_harness::{check, emit_csv, run, Expectations, ExperimentSpec, HarnessError, ResultTable, Scenario};

fn spec(json: &str) -> ExperimentSpec {
    ExperimentSpec::from_json(json).unwrap()
}

#[test]
fn fig3_revenue_strictly_decreasing() {
    let out = run(&ExperimentSpec::defaults(Scenario::Fig3).unwrap(), Some(2)).unwrap();
    let r = out.table.numbers("R").unwrap();
    assert_eq!(r.len(), 25);
    assert!(r.windows(2).all(|w| w[1] < w[0]), "{r:?}");
    assert_eq!(out.scalars["strictly_decreasing"], 1.0);
}

#[test]
fn fig4_gap_bounded_and_programs_attached() {
    let out = run(&ExperimentSpec::defaults(Scenario::Fig4).unwrap(), None).unwrap();
    assert_eq!(out.table.columns(), ["n", "r_hb", "r_upper", "subsidy", "gap"]);
    let gap = out.table.numbers("gap").unwrap();
    assert!(gap.iter().all(|&g| g <= 12.0 && g >= -1e-9), "{gap:?}");
    let programs = out.programs.unwrap();
    let last = &programs.as_array().unwrap()[19];
    assert_eq!(last["n"], 20);
    assert_eq!(last["schedule"]["bonuses"].as_array().unwrap().len(), 20);
    assert_eq!(last["anchors"]["s_cross"].as_array().unwrap().len(), 20);
    assert_eq!(last["schedule"]["bonuses"][19], 12.0);
}

#[test]
fn fig6_columns() {
    let out = run(
        &spec(r#"{"schema_version":1,"scenario":"fig6","parameters":{"k":[2,10]}}"#),
        None,
    )
    .unwrap();
    assert_eq!(out.table.columns(), ["k", "B_a", "t_a", "target", "R_a"]);
    let targets: Vec<&Cell> = out.table.column("target").unwrap();
    assert_eq!(targets, [&Cell::Text("both"), &Cell::Text("owner2")]);
    assert!((out.scalars["critical_k"] - 7.25).abs() < 0.05);
}

#[test]
fn output_independent_of_thread_count() {
    let s = spec(
        r#"{"schema_version":1,"scenario":"duopoly_sweep","parameters":{"k":{"from":1.5,"to":12,"step":0.75},"ratio":{"from":1,"to":1.9,"step":0.05}}}"#,
    );
    let one = run(&s, Some(1)).unwrap().table.to_csv_string();
    for jobs in [2, 8] {
        assert_eq!(run(&s, Some(jobs)).unwrap().table.to_csv_string(), one);
    }
    assert_eq!(one.lines().count(), 1 + 15 * 19);
}

#[test]
fn emitted_files_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let s = ExperimentSpec::defaults(Scenario::Fig7).unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    emit_csv(&run(&s, Some(3)).unwrap().table, &a).unwrap();
    emit_csv(&run(&s, Some(1)).unwrap().table, &b).unwrap();
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    assert!(!bytes.contains(&b'\r'));
    assert!(bytes.starts_with(b"ratio,r_llp,r_signup,advantage\n1,"));
}

#[test]
fn header_only_file_for_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    emit_csv(&ResultTable::new(vec!["k", "B_a", "t_a", "target", "R_a"]), &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "k,B_a,t_a,target,R_a\n");
}

#[test]
fn filesystem_errors_name_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("x.csv");
    let err = emit_csv(&ResultTable::new(vec!["x"]), &path).unwrap_err();
    assert!(matches!(err, HarnessError::Io { .. }));
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().starts_with(&path.display().to_string()));
}

#[test]
fn empty_range_rejected() {
    let err = ExperimentSpec::from_json(
        r#"{"schema_version":1,"scenario":"fig7","parameters":{"ratio":{"from":1.8,"to":1.0,"step":0.05}}}"#,
    )
    .unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("parameters.ratio: range is empty"), "{err}");
}

#[test]
fn solver_errors_carry_the_point() {
    // p_b at the weaker platform's renter charge leaves no room to compete
    let err = run(
        &spec(r#"{"schema_version":1,"scenario":"fig7","parameters":{"ratio":[1.5,2.0]}}"#),
        None,
    )
    .unwrap_err();
    assert_eq!(err.exit_code(), 3);
    let msg = err.to_string();
    assert!(msg.starts_with("fig7 at ") && msg.contains("ratio=2"), "{msg}");
}

#[test]
fn monopoly_sweep_with_oracle_column() {
    let out = run(
        &spec(r#"{"schema_version":1,"scenario":"monopoly_sweep","parameters":{"p":[0,3]},"overrides":{"grid_resolution":100}}"#),
        None,
    )
    .unwrap();
    let (r, g) = (out.table.numbers("R").unwrap(), out.table.numbers("r_grid").unwrap());
    for (a, b) in r.iter().zip(&g) {
        assert!(a >= b && a - b < 2e-2, "{a} vs {b}");
    }
}

#[test]
fn check_against_expectations() {
    let out = run(&ExperimentSpec::defaults(Scenario::Fig6).unwrap(), None).unwrap();
    let good = Expectations::from_json(r#"{"assertions":{"critical_k":{"value":7.2,"tolerance":0.2}}}"#).unwrap();
    assert!(check(&out, &good, 1.0).passed());

    let wrong = Expectations::from_json(
        r#"{"assertions":{"critical_k":{"value":9.0,"tolerance":0.2},"switch_point":{"value":1,"tolerance":1}}}"#,
    )
    .unwrap();
    let report = check(&out, &wrong, 1.0);
    assert!(!report.passed());
    let lines: Vec<String> = report.outcomes.iter().map(ToString::to_string).collect();
    assert!(lines[0].starts_with("FAIL critical_k measured=7.25"), "{}", lines[0]);
    assert!(lines[1].starts_with("MISSING switch_point"), "{}", lines[1]);
    // a wide enough tolerance scale lets the wrong expectation through
    assert!(check(
        &out,
        &Expectations::from_json(r#"{"assertions":{"critical_k":{"value":9.0,"tolerance":0.2}}}"#).unwrap(),
        10.0
    )
    .passed());
}

#[test]
fn fig8_sentinel_and_drop() {
    let out = run(
        &spec(r#"{"schema_version":1,"scenario":"fig8","parameters":{"ratio":[1.35,1.5]}}"#),
        None,
    )
    .unwrap();
    assert_eq!(out.scalars["k_signup@1.35"], f64::INFINITY);
    assert!((out.scalars["k_signup@1.5"] - 6.1).abs() <= 0.3);
    assert!(out.table.to_csv_string().contains(",inf\n"));
}
