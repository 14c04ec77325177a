use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_harmonious"))
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const GATE_1D: [&str; 8] = ["--alpha", "0.3", "--epsilon", "0.5", "--beta", "1", "--lambda", "0.4"];

#[test]
fn probe_builtin_grids() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["probe", "--grid", "1d", "--n", "257", "--seed", "5"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(dir.path().join("probe.json"));
    assert_eq!(v["manifest"]["seed"], 5);
    let d1 = v["report"]["probe"]["annular_decay"][0]["estimate"].as_f64().unwrap();
    let dm = v["report"]["probe"]["doubling_estimate"].as_f64().unwrap();
    assert!((1.0..=1.1).contains(&d1) && (1.8..=2.3).contains(&dm), "{d1} {dm}");
}

#[test]
fn malformed_spaces_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    fs::write(&empty, r#"{"metric": "euclidean", "points": []}"#).unwrap();
    let o = run(&["probe", "--space", empty.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("no points"), "{}", stderr(&o));

    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"metric": "euclidean", "points": [
            {"id": 10, "coords": [0.0], "weight": 1.0, "boundary": true},
            {"id": 11, "coords": [1.0], "weight": -1.0}]}"#,
    )
    .unwrap();
    let o = run(&["probe", "--space", bad.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("point record 1 (id 11)"), "{}", stderr(&o));
}

#[test]
fn validate_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["validate", "--grid", "1d", "--n", "257"];
    args.extend(GATE_1D);
    assert_eq!(code(&run(&args, dir.path())), 0);
    assert_eq!(json(dir.path().join("validate.json"))["report"]["pass"], true);

    let o = run(
        &[
            "validate",
            "--grid",
            "1d",
            "--n",
            "257",
            "--alpha",
            "0.6",
            "--lipschitz",
            "2",
            "--epsilon",
            "0.2",
            "--lambda",
            "0.1",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("|α| < 1/L"));
    let failed = json(dir.path().join("validate.json"))["report"]["gate"]["failed_conditions"].clone();
    assert!(failed.as_array().unwrap().iter().any(|c| c == "|α| < 1/L"));

    let rho = dir.path().join("rho.csv");
    let mut text = String::from("id,rho\n");
    for k in 0..33 {
        let d = (k as f64 / 32.0).min(1.0 - k as f64 / 32.0);
        let r = if k == 16 { 0.0 } else { 0.4 * d };
        text.push_str(&format!("{k},{r}\n"));
    }
    fs::write(&rho, text).unwrap();
    let mut args = vec!["validate", "--grid", "1d", "--n", "33", "--rho", rho.to_str().unwrap()];
    args.extend(GATE_1D);
    let o = run(&args, dir.path());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("point id 16"), "{}", stderr(&o));
}

fn linear_initial(dir: &Path, n: usize) -> PathBuf {
    let p = dir.join("linear.csv");
    let mut text = String::from("id,value\n");
    for k in 0..n {
        text.push_str(&format!("{k},{}\n", k as f64 / (n - 1) as f64));
    }
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn solve_and_certify_linear_1d() {
    let dir = tempfile::tempdir().unwrap();
    let init = linear_initial(dir.path(), 257);
    let o = run(
        &[
            "solve",
            "--grid",
            "1d",
            "--n",
            "257",
            "--alpha",
            "0.3",
            "--boundary-fn",
            "linear",
            "--initial",
            init.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rep = json(dir.path().join("solve_report.json"));
    assert_eq!(rep["report"]["stats"]["iterations_used"], 0);
    assert_eq!(rep["report"]["stats"]["initial_guess"], "supplied");

    let field = dir.path().join("field.csv");
    let mut args = vec!["certify", "--grid", "1d", "--n", "257", "--field", field.to_str().unwrap()];
    args.extend(GATE_1D);
    let o = run(&args, dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let cert = json(dir.path().join("certificate.json"));
    let e = cert["report"]["empirical_constant"].as_f64().unwrap();
    assert!((e - 1.0).abs() < 1e-12 && e <= cert["report"]["theoretical_constant"].as_f64().unwrap());

    let mut args = vec!["certify", "--grid", "1d", "--n", "257", "--field", field.to_str().unwrap()];
    args.extend(["--alpha", "1", "--epsilon", "0.5", "--lambda", "0.4"]);
    let o = run(&args, dir.path());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("out of scope"));
}

#[test]
fn truncated_solve_exits_3_and_stale_field_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["solve", "--grid", "2d", "--n", "33", "--alpha", "0.3", "--boundary-fn", "x2-y2", "--max-iterations", "1"],
        dir.path(),
    );
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stdout).contains("not converged"));
    assert!(dir.path().join("field.csv").exists() && dir.path().join("solve_report.json").exists());

    let field = dir.path().join("field.csv");
    let o = run(
        &[
            "certify",
            "--grid",
            "2d",
            "--n",
            "33",
            "--field",
            field.to_str().unwrap(),
            "--alpha",
            "0.3",
            "--epsilon",
            "0.5",
            "--lambda",
            "0.4",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("not a fixed point"));
}

#[test]
fn solve_refuses_inadmissible_radius_even_with_force() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "solve",
            "--grid",
            "1d",
            "--n",
            "33",
            "--alpha",
            "0.3",
            "--boundary-fn",
            "linear",
            "--rho-factor",
            "1.5",
            "--force",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(!dir.path().join("field.csv").exists());
}

#[test]
fn gate_failure_blocks_solve_unless_forced() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "solve",
        "--grid",
        "1d",
        "--n",
        "33",
        "--alpha",
        "0.3",
        "--boundary-fn",
        "linear",
        "--epsilon",
        "0.8",
        "--lambda",
        "0.4",
    ];
    let o = run(&base, dir.path());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("0 < ε < 1 − L|α|"));
    let mut forced = base.to_vec();
    forced.push("--force");
    assert_eq!(code(&run(&forced, dir.path())), 0);
    assert_eq!(json(dir.path().join("solve_report.json"))["report"]["forced"], true);
}

#[test]
fn boundary_file_must_cover_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let b = dir.path().join("b.csv");
    fs::write(&b, "id,value\n0,0\n").unwrap();
    let o = run(&["solve", "--grid", "1d", "--n", "33", "--alpha", "0", "--boundary", b.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("missing boundary value for point id 32"), "{}", stderr(&o));
}

#[test]
fn asymptotics_predictions() {
    let dir = tempfile::tempdir().unwrap();
    for (mode, want) in [("mean", 0.5), ("midrange", 1.0)] {
        let o = run(&["asymptotics", "--fn", "sq_norm", "--x", "1,0", "--n", "2", "--mode", mode], dir.path());
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let v = json(dir.path().join("summary.json"));
        assert_eq!(v["report"]["predicted"].as_f64().unwrap(), want);
        let rows = fs::read_to_string(dir.path().join("quotients.csv")).unwrap();
        assert_eq!(rows.lines().count(), 5);
        assert!(rows.starts_with("radius,quotient\n"));
    }
    let o = run(&["asymptotics", "--fn", "linear", "--x", "0.3,-0.2", "--mode", "p", "--p", "5"], dir.path());
    assert_eq!(code(&o), 0);
    assert_eq!(json(dir.path().join("summary.json"))["report"]["predicted"].as_f64().unwrap(), 0.0);
    let o = run(&["asymptotics", "--fn", "sq_norm", "--x", "0,0", "--mode", "midrange"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("gradient vanishes"));
}

#[test]
fn manifest_replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = run(
        &[
            "solve",
            "--grid",
            "2d",
            "--n",
            "17",
            "--alpha",
            "0.3",
            "--boundary-fn",
            "x2-y2",
            "--epsilon",
            "0.5",
            "--lambda",
            "0.4",
            "--seed",
            "11",
        ],
        &out,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let names = ["field.csv", "solve_report.json", "manifest.json"];
    let before: Vec<Vec<u8>> = names.iter().map(|n| fs::read(out.join(n)).unwrap()).collect();
    let copy = dir.path().join("manifest.json");
    fs::copy(out.join("solve_report.json"), &copy).unwrap();
    for n in names {
        fs::remove_file(out.join(n)).unwrap();
    }
    let o = bin().arg("--manifest").arg(&copy).output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for (n, b) in names.iter().zip(&before) {
        assert_eq!(&fs::read(out.join(n)).unwrap(), b, "{n} differs");
    }
}

#[test]
fn emitted_field_reloads_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["solve", "--grid", "disk", "--n", "17", "--alpha", "-0.4", "--boundary-fn", "x2-y2"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let space = harmonious::space::disk_grid(17);
    let field = harmonious::operators::ScalarField::load_csv(&space, dir.path().join("field.csv")).unwrap();
    let mut again = Vec::new();
    field.write_csv(&space, &mut again).unwrap();
    assert_eq!(again, fs::read(dir.path().join("field.csv")).unwrap());
    let rep = json(dir.path().join("solve_report.json"));
    let rho = harmonious::radius::RadiusField::proportional(&space, 0.4).unwrap();
    let r = harmonious::operators::residual(&space, &rho, &field, -0.4).unwrap();
    assert_eq!(r, rep["report"]["stats"]["final_residual"].as_f64().unwrap());
}
