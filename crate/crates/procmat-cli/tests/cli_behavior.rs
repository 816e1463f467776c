//! End-to-end contract tests for the `procmat` binary: exit codes
//! (0 success, 1 model-level failure, 2 usage or parse failure), the
//! CSV capacity format, and the worked examples each command must
//! reproduce.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::DMatrix;
use procmat::{
    are_close, build_harmonic_reduced, build_partial_swap, c64, AmplitudeVector3,
    CapacityMargin, ClosenessCriterion, HarmonicCleanModel, LabeledOperator, PartialSwapModel,
    C64,
};

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_procmat"))
        .args(args)
        .output()
        .expect("the CLI binary launches")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is UTF-8")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("the CLI exits normally")
}

fn write_model(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).expect("temp model file writes");
    path
}

/// Parse CSV rows as (direction, eps, capacity) triples, skipping the
/// header.
fn parse_rows(csv: &str) -> Vec<(String, f64, f64)> {
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("direction,eps,capacity_bits"),
        "capacity output must start with the CSV header"
    );
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let fields: Vec<&str> = l.split(',').collect();
            assert_eq!(fields.len(), 3, "CSV row {l:?} must have three fields");
            (
                fields[0].to_string(),
                fields[1].parse().expect("eps parses"),
                fields[2].parse().expect("capacity parses"),
            )
        })
        .collect()
}

/// Pull a `key: value` float out of a plain-text report.
fn report_value(stdout: &str, key: &str) -> f64 {
    let prefix = format!("{key}: ");
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("report lacks the {key} line:\n{stdout}"))
        .parse()
        .expect("report value parses")
}

const PURE_FORWARD_HARMONIC: &str = r#"{
  "schema_version": "1",
  "kind": "harmonic",
  "wire_dim": 2,
  "alpha": [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]]
}"#;

const PURE_DISCONNECTED_HARMONIC: &str = r#"{
  "schema_version": "1",
  "kind": "harmonic",
  "wire_dim": 2,
  "alpha": [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]
}"#;

// -------------------------------------------------------------------
// validate
// -------------------------------------------------------------------

#[test]
fn validate_accepts_a_pure_forward_model() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), "forward.json", PURE_FORWARD_HARMONIC);
    let out = run(&["validate", model.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    assert!(stdout_of(&out).contains("valid: true"));
}

#[test]
fn validate_rejects_inadmissible_sectored_weights() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(
        dir.path(),
        "inadmissible.json",
        r#"{
  "schema_version": "1",
  "kind": "sectored",
  "wire_dim": 2,
  "amplitudes": [
    [[0.5, 0.0], [0.5, 0.0], [0.0, 0.0]],
    [[0.0, 0.0], [0.5, 0.0], [0.0, 0.0]],
    [[0.0, 0.0], [0.0, 0.0], [0.5, 0.0]]
  ]
}"#,
    );
    let out = run(&["validate", model.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 1);
    let err = stderr_of(&out);
    assert!(
        err.contains("constraint violation") && err.contains("inadmissible"),
        "stderr should name the admissibility constraint: {err}"
    );
}

#[test]
fn validate_reports_parse_errors_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(
        dir.path(),
        "broken.json",
        r#"{"schema_version": "1", "kind": "harmonic", "wire_dim": 2,
            "alpha": [["oops", 0.0], [0.0, 0.0], [0.0, 0.0]]}"#,
    );
    let out = run(&["validate", model.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
    assert!(
        stderr_of(&out).contains("line"),
        "parse failures should carry a location: {}",
        stderr_of(&out)
    );
}

#[test]
fn validate_rejects_unknown_kinds_and_versions_as_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let unknown_kind = write_model(
        dir.path(),
        "unknown_kind.json",
        r#"{"schema_version": "1", "kind": "mystery", "wire_dim": 2}"#,
    );
    assert_eq!(exit_code(&run(&["validate", unknown_kind.to_str().unwrap()])), 2);

    let wrong_version = write_model(
        dir.path(),
        "wrong_version.json",
        &PURE_FORWARD_HARMONIC.replace("\"schema_version\": \"1\"", "\"schema_version\": \"7\""),
    );
    assert_eq!(exit_code(&run(&["validate", wrong_version.to_str().unwrap()])), 2);

    let out = run(&["validate", "this_file_does_not_exist.json"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn validate_rejects_an_undeclared_partial_swap_wiring() {
    let dir = tempfile::tempdir().unwrap();
    let fixture_text =
        std::fs::read_to_string(fixture("partial_swap.json")).expect("fixture reads");
    let model = write_model(
        dir.path(),
        "bad_wiring.json",
        &fixture_text.replace("a2->a2_copy", "a2->elsewhere"),
    );
    let out = run(&["validate", model.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
}

// -------------------------------------------------------------------
// capacity
// -------------------------------------------------------------------

#[test]
fn capacity_reproduces_the_saturation_example_row() {
    let out = run(&[
        "capacity",
        &fixture("harmonic_d4.json"),
        "--direction",
        "forward",
        "--eps-grid",
        "0:0.1:0.02",
    ]);
    assert_eq!(exit_code(&out), 0);
    let rows = parse_rows(&stdout_of(&out));
    assert!(
        rows.iter().any(|(d, e, q)| d == "forward" && *e == 0.02 && *q == 2.0),
        "expected the row forward,0.02,2 in:\n{}",
        stdout_of(&out)
    );
}

#[test]
fn capacity_staircases_are_non_decreasing_on_the_default_grid() {
    let out = run(&["capacity", &fixture("harmonic.json")]);
    assert_eq!(exit_code(&out), 0);
    let rows = parse_rows(&stdout_of(&out));
    assert!(!rows.is_empty());
    for pair in rows.windows(2) {
        if pair[0].0 == pair[1].0 {
            assert!(
                pair[1].2 >= pair[0].2,
                "capacity must not decrease with eps: {pair:?}"
            );
        }
    }
}

#[test]
fn capacity_backward_is_flat_zero_without_a_backward_branch() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), "forward.json", PURE_FORWARD_HARMONIC);
    let out = run(&[
        "capacity",
        model.to_str().unwrap(),
        "--direction",
        "backward",
        "--eps-grid",
        "0:0.75:0.05",
    ]);
    assert_eq!(exit_code(&out), 0);
    let rows = parse_rows(&stdout_of(&out));
    assert_eq!(rows.len(), 16);
    for (direction, eps, q) in &rows {
        assert_eq!(direction, "backward");
        if *eps < 0.75 {
            assert_eq!(*q, 0.0, "no backward branch, yet capacity {q} at eps {eps}");
        } else {
            // At ε = 3/4 a fresh maximally entangled pair already meets
            // the fidelity target for a two-dimensional wire.
            assert_eq!(*q, 1.0);
        }
    }
}

#[test]
fn capacity_requires_the_oracle_flag_outside_the_mixture_family() {
    for name in ["clean_general.json", "partial_swap.json"] {
        let out = run(&["capacity", &fixture(name)]);
        assert_eq!(exit_code(&out), 1, "{name} without --oracle must exit 1");
        assert!(
            stderr_of(&out).contains("--oracle"),
            "the error must point at the staircase fallback flag: {}",
            stderr_of(&out)
        );
    }
    let out = run(&["capacity", &fixture("partial_swap.json"), "--oracle"]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    assert!(!parse_rows(&stdout_of(&out)).is_empty());
}

#[test]
fn capacity_oracle_agrees_with_the_closed_form_on_a_harmonic_model() {
    let closed = run(&["capacity", &fixture("harmonic.json")]);
    let oracle = run(&["capacity", &fixture("harmonic.json"), "--oracle"]);
    assert_eq!(exit_code(&closed), 0);
    assert_eq!(exit_code(&oracle), 0);
    assert_eq!(
        stdout_of(&closed),
        stdout_of(&oracle),
        "the Born-rule staircase must reproduce the closed form"
    );
}

#[test]
fn capacity_covers_both_sectors_for_sectored_models() {
    let out = run(&["capacity", &fixture("sectored_typical.json"), "--eps-grid", "0:0.1:0.05"]);
    assert_eq!(exit_code(&out), 0);
    let rows = parse_rows(&stdout_of(&out));
    for tag in [
        "forward_massless",
        "forward_massive",
        "backward_massless",
        "backward_massive",
    ] {
        assert!(
            rows.iter().any(|(d, _, _)| d == tag),
            "sectored capacity output lacks rows for {tag}"
        );
    }
}

#[test]
fn capacity_rejects_malformed_grid_specs_as_usage_errors() {
    for spec in ["0.5:0.1:0.05", "0:0.75:0", "0:0.75", "a:b:c", "0:2:0.5"] {
        let out = run(&["capacity", &fixture("harmonic.json"), "--eps-grid", spec]);
        assert_eq!(exit_code(&out), 2, "grid spec {spec:?} must be a usage error");
    }
}

#[test]
fn capacity_writes_csv_files_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("curve.csv");
    let out = run(&[
        "capacity",
        &fixture("harmonic.json"),
        "--direction",
        "forward",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    assert!(stdout_of(&out).is_empty(), "CSV goes to the file, not stdout");
    let written = std::fs::read_to_string(&out_path).expect("curve file written");
    assert!(!parse_rows(&written).is_empty());
}

// -------------------------------------------------------------------
// typicality
// -------------------------------------------------------------------

#[test]
fn typicality_reproduces_the_worked_examples() {
    let typical = run(&["typicality", &fixture("sectored_typical.json")]);
    assert_eq!(exit_code(&typical), 0);
    let report = stdout_of(&typical);
    assert!(report.contains("typical: true"), "report:\n{report}");
    assert!(report.contains("theta_connect: 0.9"), "thresholds must be echoed");
    assert!(report.contains("kappa_comparable: 2"), "thresholds must be echoed");

    let atypical = run(&["typicality", &fixture("sectored_atypical.json")]);
    assert_eq!(exit_code(&atypical), 0);
    assert!(stdout_of(&atypical).contains("typical: false"));

    let strict = run(&[
        "typicality",
        &fixture("sectored_typical.json"),
        "--condition",
        "VS",
    ]);
    assert_eq!(exit_code(&strict), 0);
    assert!(stdout_of(&strict).contains("typical: false"));
}

#[test]
fn typicality_rejects_unsectored_models() {
    let out = run(&["typicality", &fixture("harmonic.json")]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr_of(&out).contains("sectored"));
}

#[test]
fn typicality_flags_bad_conditions_and_thresholds_as_usage_errors() {
    let file = fixture("sectored_typical.json");
    let bad_condition = run(&["typicality", &file, "--condition", "Q"]);
    assert_eq!(exit_code(&bad_condition), 2);
    let bad_theta = run(&["typicality", &file, "--theta", "0"]);
    assert_eq!(exit_code(&bad_theta), 2);
    let bad_kappa = run(&["typicality", &file, "--kappa", "0.5"]);
    assert_eq!(exit_code(&bad_kappa), 2);
}

// -------------------------------------------------------------------
// compare
// -------------------------------------------------------------------

#[test]
fn compare_finds_identical_files_close() {
    let file = fixture("harmonic.json");
    let out = run(&["compare", &file, &file]);
    assert_eq!(exit_code(&out), 0);
    assert!(stdout_of(&out).contains("close: true"));
}

#[test]
fn compare_rejects_unequal_dims_with_a_normalization_note() {
    let out = run(&["compare", &fixture("harmonic.json"), &fixture("harmonic_d4.json")]);
    assert_eq!(exit_code(&out), 1);
    assert!(
        stderr_of(&out).contains("normaliz"),
        "the dimension error should mention normalization: {}",
        stderr_of(&out)
    );
}

#[test]
fn compare_honors_a_custom_criterion_file() {
    let dir = tempfile::tempdir().unwrap();
    let criterion_path = dir.path().join("criterion.json");
    std::fs::write(
        &criterion_path,
        r#"{"forward": [{"eps": 0.4, "margin_bits": 0.5}],
            "backward": [{"eps": 0.4, "margin_bits": 0.5}]}"#,
    )
    .unwrap();
    let out = run(&[
        "compare",
        &fixture("harmonic.json"),
        &fixture("partial_swap.json"),
        "--criterion",
        criterion_path.to_str().unwrap(),
    ]);

    // The verdict must match the library on the same pair and criterion.
    let alpha = AmplitudeVector3::from_probabilities([0.5, 0.3, 0.2]).unwrap();
    let harmonic = build_harmonic_reduced(&HarmonicCleanModel::new(alpha, 2, None).unwrap())
        .unwrap();
    let mut rho = DMatrix::<C64>::zeros(4, 4);
    for (i, j) in [(0usize, 0usize), (0, 3), (3, 0), (3, 3)] {
        rho[(i, j)] = c64(0.5, 0.0);
    }
    let rho = LabeledOperator::new(
        vec![procmat::label("a1", 2), procmat::label("a1_copy", 2)],
        rho,
    )
    .unwrap();
    let kraus = vec![
        DMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(0.8, 0.0)]),
        DMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(0.6, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]),
    ];
    let swap = build_partial_swap(&PartialSwapModel::new(0.3, rho, kraus).unwrap()).unwrap();
    let criterion = ClosenessCriterion::new(
        vec![CapacityMargin { eps: 0.4, margin_bits: 0.5 }],
        vec![CapacityMargin { eps: 0.4, margin_bits: 0.5 }],
    )
    .unwrap();
    let expected = are_close(&harmonic, &swap, &criterion).unwrap();

    assert_eq!(exit_code(&out), i32::from(!expected.close));
    assert!(stdout_of(&out).contains(&format!("close: {}", expected.close)));
}

#[test]
fn compare_rejects_malformed_criterion_files_as_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let criterion_path = dir.path().join("criterion.json");
    std::fs::write(&criterion_path, r#"{"sideways": []}"#).unwrap();
    let file = fixture("harmonic.json");
    let out = run(&["compare", &file, &file, "--criterion", criterion_path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
}

// -------------------------------------------------------------------
// invert
// -------------------------------------------------------------------

/// Generate forward and backward curve CSVs for a model file.
fn generate_curves(dir: &Path, model: &Path, grid: &str) -> (PathBuf, PathBuf) {
    let fwd = dir.join("forward.csv");
    let bwd = dir.join("backward.csv");
    for (direction, path) in [("forward", &fwd), ("backward", &bwd)] {
        let out = run(&[
            "capacity",
            model.to_str().unwrap(),
            "--direction",
            direction,
            "--eps-grid",
            grid,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&out), 0, "curve generation failed: {}", stderr_of(&out));
    }
    (fwd, bwd)
}

#[test]
fn invert_round_trips_cmd_capacity_output() {
    let dir = tempfile::tempdir().unwrap();
    let model = PathBuf::from(fixture("harmonic.json"));
    let (fwd, bwd) = generate_curves(dir.path(), &model, "0:0.75:0.001");
    let out = run(&[
        "invert",
        "--forward",
        fwd.to_str().unwrap(),
        "--backward",
        bwd.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let report = stdout_of(&out);
    for (key, expected) in [("p1", 0.5), ("p2", 0.3), ("p3", 0.2)] {
        let got = report_value(&report, key);
        assert!(
            (got - expected).abs() <= 2e-3,
            "{key} recovered as {got}, expected {expected} within twice the grid step"
        );
    }
    assert!(report.contains("dims: 2 2"), "report:\n{report}");
}

#[test]
fn invert_reports_fully_disconnected_curves_as_undetermined() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), "disconnected.json", PURE_DISCONNECTED_HARMONIC);
    // Stay below ε = 3/4, where even a disconnected process saturates.
    let (fwd, bwd) = generate_curves(dir.path(), &model, "0:0.7:0.05");
    let out = run(&[
        "invert",
        "--forward",
        fwd.to_str().unwrap(),
        "--backward",
        bwd.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let report = stdout_of(&out);
    assert_eq!(report_value(&report, "p1"), 0.0);
    assert_eq!(report_value(&report, "p2"), 0.0);
    assert_eq!(report_value(&report, "p3"), 1.0);
    assert!(report.contains("dims: undetermined"), "report:\n{report}");
}

#[test]
fn invert_rejects_truncated_csv() {
    let dir = tempfile::tempdir().unwrap();
    let model = PathBuf::from(fixture("harmonic.json"));
    let (fwd, bwd) = generate_curves(dir.path(), &model, "0:0.75:0.05");
    let text = std::fs::read_to_string(&fwd).unwrap();
    let cut = &text[..text.len() - 5]; // slice into the final record
    let truncated = dir.path().join("truncated.csv");
    std::fs::write(&truncated, cut).unwrap();
    let out = run(&[
        "invert",
        "--forward",
        truncated.to_str().unwrap(),
        "--backward",
        bwd.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 1);
    assert!(!stderr_of(&out).is_empty());
}

#[test]
fn invert_rejects_swapped_direction_files() {
    let dir = tempfile::tempdir().unwrap();
    let model = PathBuf::from(fixture("harmonic.json"));
    let (fwd, bwd) = generate_curves(dir.path(), &model, "0:0.75:0.05");
    let out = run(&[
        "invert",
        "--forward",
        bwd.to_str().unwrap(),
        "--backward",
        fwd.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 1, "direction tags must match the flag they arrive under");
}

// -------------------------------------------------------------------
// leakage
// -------------------------------------------------------------------

#[test]
fn leakage_reports_no_superluminal_signalling_for_the_typical_fixture() {
    let out = run(&["leakage", &fixture("sectored_typical.json"), "--eps", "0.25"]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let report = stdout_of(&out);
    assert!(report.contains("superluminal: false"), "report:\n{report}");
    for line in [
        "sector massless",
        "sector massive",
        "forward branch_probability:",
        "backward branch_probability:",
    ] {
        assert!(report.contains(line), "report lacks {line:?}:\n{report}");
    }
}

#[test]
fn leakage_flags_a_massless_disconnected_counterexample() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(
        dir.path(),
        "counterexample.json",
        r#"{
  "schema_version": "1",
  "kind": "sectored",
  "wire_dim": 2,
  "amplitudes": [
    [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
    [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
    [[0.6324555320336759, 0.0], [0.5477225575051661, 0.0], [0.5477225575051661, 0.0]]
  ]
}"#,
    );
    let out = run(&["leakage", model.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    assert!(stdout_of(&out).contains("superluminal: true"));
}

#[test]
fn leakage_rejects_unsectored_models() {
    let out = run(&["leakage", &fixture("partial_swap.json")]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn leakage_rejects_out_of_range_eps_as_usage() {
    let out = run(&["leakage", &fixture("sectored_typical.json"), "--eps", "0.9"]);
    assert_eq!(exit_code(&out), 2);
}
