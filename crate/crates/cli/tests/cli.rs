use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_nlnoise"));
    c.env_remove("NLNOISE_WORKERS");
    c
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn validate(schema: &str, doc: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs").join(schema);
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let v = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = v.iter_errors(doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{schema:?}: {errors:?}");
}

fn run_config_line(o: &Output) -> Value {
    let err = stderr(o);
    let line = err
        .lines()
        .find_map(|l| l.strip_prefix("run-config: "))
        .expect("run-config line");
    serde_json::from_str(line).unwrap()
}

/// A temp dir holding `ik.csv`: noise-free Ikeda, N=2000.
fn ikeda_dir() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["generate", "--system", "ikeda", "--n", "2000", "--seed", "7", "--out", "ik.csv"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = dir.path().join("ik.csv");
    (dir, csv)
}

#[test]
fn generate_writes_csv_and_sidecar() {
    let (dir, csv) = ikeda_dir();
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("x,y\n"));
    assert_eq!(text.lines().count(), 2001);
    let sidecar: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ik.csv.run.json")).unwrap())
            .unwrap();
    validate("run-config.schema.json", &sidecar);
    assert_eq!(sidecar["seed"], 7);
    assert_eq!(sidecar["generator"]["config"]["alpha"], 6.0);
    // the CLI writes exactly what the library generates
    let lib = nlnoise::gen_ikeda(&nlnoise::IkedaConfig {
        seed: 7,
        ..Default::default()
    })
    .unwrap();
    let mut expected = Vec::new();
    lib.write_csv(&mut expected).unwrap();
    assert_eq!(text.as_bytes(), expected.as_slice());
}

#[test]
fn generate_overrides_and_systems() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["generate", "--system", "lorenz", "--n", "50", "--set", "dt_out=0.05", "--set", "initial=[2,1,1]"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("x,y,z\n"));
    let rc = run_config_line(&o);
    validate("run-config.schema.json", &rc);
    assert_eq!(rc["generator"]["config"]["dt_out"], 0.05);
    assert_eq!(rc["generator"]["config"]["noise"]["mode"], "superimposed");

    let o = run(&["generate", "--system", "henon", "--set", "bogus=1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bogus"));
}

#[test]
fn analyze_text_and_json() {
    let (dir, _) = ikeda_dir();
    let o = run(&["analyze", "ik.csv", "--target", "x", "--vars", "x@1,y@1"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("LR 0.9002"), "{text}");
    assert!(text.contains("{x@1, y@1}"));

    let o = run(
        &["analyze", "ik.csv", "--target", "x", "--vars", "x@1,y@1", "--json", "--out", "r.json"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    validate("analyze-report.schema.json", &report);
    assert!(report["estimate"]["sigma_nl_fractional"].as_f64().unwrap() <= 0.02);
    let rc: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("r.json.run.json")).unwrap(),
    )
    .unwrap();
    validate("run-config.schema.json", &rc);
    assert_eq!(rc["resolved_grid"], report["grid"]);
}

#[test]
fn precision_flag() {
    let (dir, _) = ikeda_dir();
    let short = stdout(&run(&["analyze", "ik.csv", "--target", "x", "--vars", "x@1"], dir.path()));
    let full = stdout(&run(
        &["analyze", "ik.csv", "--target", "x", "--vars", "x@1", "--full-precision"],
        dir.path(),
    ));
    let lr = |s: &str| {
        s.split_whitespace()
            .skip_while(|w| *w != "LR")
            .nth(1)
            .unwrap()
            .to_string()
    };
    let (a, b) = (lr(&short), lr(&full));
    assert_eq!(a.trim_start_matches(['0', '.']).len(), 4, "{a}");
    assert!(b.len() > 10, "{b}");
    assert!((a.parse::<f64>().unwrap() - b.parse::<f64>().unwrap()).abs() < 1e-4);
}

#[test]
fn identical_config_identical_output() {
    let (dir, _) = ikeda_dir();
    let args = ["analyze", "ik.csv", "--target", "x", "--vars", "x@1..2", "--json"];
    let a = run(&args, dir.path());
    let b = bin()
        .args(args)
        .env("NLNOISE_WORKERS", "3")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(run_config_line(&b)["analysis"]["workers"], 3);
}

#[test]
fn scan_embedding_and_subsets() {
    let (dir, _) = ikeda_dir();
    let o = run(&["scan", "ik.csv", "--target", "x", "--lags-up-to", "5", "--json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    validate("scan-report.schema.json", &report);
    assert_eq!(report["chosen_de"], 5);
    assert_eq!(report["rows"].as_array().unwrap().len(), 6);

    std::fs::write(dir.path().join("sets.json"), r#"["none", "x@1", ["x@1", "y@1"]]"#).unwrap();
    let o = run(&["scan", "ik.csv", "--target", "x", "--subsets", "sets.json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("{none}") && text.contains("{x@1, y@1}"), "{text}");
    assert!(!text.contains("embedding dimension"));

    let o = run(&["scan", "ik.csv", "--target", "x"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn curve_csv() {
    let (dir, _) = ikeda_dir();
    let o = run(&["curve", "ik.csv", "--target", "x", "--vars", "x@1", "--bins", "20x10"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("eps,delta,p,stderr,n_pairs"));
    assert_eq!(lines.count(), 21 * 11);

    let o = run(&["curve", "ik.csv", "--target", "x", "--vars", "x@1", "--plateau"], dir.path());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 42);
    let last: Vec<&str> = text.lines().last().unwrap().split(',').collect();
    assert_eq!(last[2], "1.000");
    assert!(last[4].parse::<u64>().unwrap() >= 200);
}

#[test]
fn fit_erf_outputs() {
    let (dir, _) = ikeda_dir();
    let o = run(&["fit-erf", "ik.csv", "--target", "x", "--vars", "x@1"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("eps,p_data,p_fit\n"));
    assert!(stderr(&o).contains("erf fit: sigma"));
    let o = run(&["fit-erf", "ik.csv", "--target", "x", "--vars", "x@1", "--json"], dir.path());
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    validate("fit-erf.schema.json", &doc);
    assert_eq!(doc["points"].as_array().unwrap().len(), 41);
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["analyze", "missing.csv", "--target", "x"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing.csv"));

    std::fs::write(dir.path().join("c.csv"), "x\n1\n1\n1\n").unwrap();
    let o = run(&["analyze", "c.csv", "--target", "x"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let o = run(&["analyze", "c.csv", "--target", "q"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("'q'"));

    for args in [
        vec!["analyze", "c.csv", "--target", "x", "--bogus"],
        vec!["frobnicate"],
        vec!["analyze", "c.csv", "--target", "x", "--vars", "x@"],
        vec!["analyze", "c.csv", "--target", "x", "--eps-range", "0.1,1"],
    ] {
        let o = run(&args, dir.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(stderr(&o).contains("Usage") || stderr(&o).contains("error"), "{args:?}");
    }
    assert_eq!(run(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(run(&["--version"], dir.path()).status.code(), Some(0));
}
