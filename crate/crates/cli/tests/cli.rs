use std::process::{Command, Output};

use serde_json::Value;

fn quillen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quillen"))
        .args(args)
        .env_remove("QUILLEN_CONFIG")
        .output()
        .expect("run quillen")
}

fn json(args: &[&str]) -> Value {
    let out = quillen(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn validator() -> jsonschema::Validator {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/output-schema.json")).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn zeta_prime_minus_one() -> f64 {
    // 1/12 − log A with A the Glaisher–Kinkelin constant.
    1.0 / 12.0 - 1.282_427_129_100_622_6_f64.ln()
}

#[test]
fn canonical_torsion_example() {
    let v = json(&[
        "torsion",
        "--bundle",
        "canonical:1",
        "--volume",
        "canonical",
        "--route",
        "direct",
        "--no-meta",
    ]);
    let value = v["value"].as_f64().unwrap();
    let derived = 4.0 * zeta_prime_minus_one() - 1.0 / 6.0 - (9.0f64 / 4.0).ln();
    assert!((value - derived).abs() < 1e-9, "{value}");
    assert_eq!(v["route"], "direct-integrable");
    assert!(v["err"].as_f64().unwrap() >= 0.0);
    assert_eq!(v["components"].as_object().unwrap().len(), 4);
}

#[test]
fn output_is_deterministic() {
    let args = [
        "torsion",
        "--bundle",
        "canonical:1",
        "--volume",
        "canonical",
        "--route",
        "direct",
        "--no-meta",
    ];
    let a = quillen(&args);
    let b = quillen(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn zhang_sup_distance() {
    let v = json(&["zhang", "--base", "fs:1", "--p", "2", "--n", "8", "--report", "sup"]);
    let d = v["sup_distance"].as_f64().unwrap();
    assert!((d - 2f64.ln() / 256.0).abs() < 1e-14);
    assert_eq!(v["meta"]["command"], "zhang");
}

#[test]
fn every_command_matches_the_schema() {
    let schema = validator();
    let runs: Vec<Vec<&str>> = vec![
        vec!["torsion", "--bundle", "fs:2"],
        vec!["quillen", "--bundle", "lse:m=1,eps=0.3", "--volume", "canonical"],
        vec!["gram", "--bundle", "canonical:3", "--volume", "canonical", "--polar"],
        vec![
            "anomaly",
            "--kind",
            "bundle",
            "--bundle",
            "fs:1",
            "--bundle2",
            "canonical:1",
        ],
        vec![
            "anomaly",
            "--kind",
            "volume",
            "--bundle",
            "fs:1",
            "--volume2",
            "canonical",
        ],
        vec!["zhang", "--base", "fs:2", "--p", "3", "--n", "4", "--report", "steps"],
        vec![
            "zhang",
            "--base",
            "fs:2",
            "--p",
            "3",
            "--n",
            "4",
            "--report",
            "potential",
            "--samples",
            "5",
        ],
        vec!["counterexample", "--deltas", "1e-2,1e-3"],
        vec!["closed-form", "--ms", "0,2", "--n-max", "8"],
        vec![
            "double-limit",
            "--n-max",
            "8",
            "--pair",
            "zhang:4/zhang:4",
            "--pair",
            "lse:4@1/zhang:4@2",
        ],
        vec!["bt-check", "--n-max", "6", "--families", "zhang:2", "--tests", "bump"],
    ];
    for args in runs {
        let v = json(&args);
        if let Err(e) = schema.validate(&v) {
            panic!("{args:?}: {e}");
        }
        // Re-parsing the printed text gives back the same document.
        let again: Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(again, v);
    }
}

#[test]
fn csv_output_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gram.csv");
    let out = quillen(&[
        "gram",
        "--bundle",
        "canonical:2",
        "--volume",
        "canonical",
        "--format",
        "csv",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,entry,error,polar"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "0");
    assert!((first[1].parse::<f64>().unwrap() - 4.0 / 3.0).abs() < 1e-14);
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn fifteen_significant_digits() {
    let v = json(&["gram", "--bundle", "fs:1", "--no-meta"]);
    for e in v["entries"].as_array().unwrap() {
        let s = e.to_string();
        let digits = s.trim_start_matches('-').split('e').next().unwrap().replace('.', "");
        assert!(digits.trim_start_matches('0').len() <= 15, "{s}");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(quillen(&["torsion"]).status.code(), Some(2));
    assert_eq!(quillen(&["torsion", "--bundle", "nonsense:1"]).status.code(), Some(2));
    assert_eq!(
        quillen(&[
            "torsion",
            "--bundle",
            "canonical:1",
            "--volume",
            "canonical",
            "--route",
            "spectral"
        ])
        .status
        .code(),
        Some(2)
    );
    let numerical = quillen(&[
        "torsion",
        "--bundle",
        "lse:m=3,eps=0.001",
        "--quad-abs-tol",
        "1e-15",
        "--quad-rel-tol",
        "1e-15",
        "--max-subdivisions",
        "3",
    ]);
    assert_eq!(numerical.status.code(), Some(3));
    let diag: Value = serde_json::from_slice(&numerical.stderr).unwrap();
    assert_eq!(diag["error"], "numerical");
    assert!(diag["diagnostic"].as_str().unwrap().contains("subdivisions"));
    // Verdict failures only change the exit status under --verify.
    let args = ["counterexample", "--deltas", "1e-2,1e-3"];
    assert_eq!(quillen(&args).status.code(), Some(0));
    let mut verify = args.to_vec();
    verify.push("--verify");
    let out = quillen(&verify);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL (b)"));
    assert_eq!(
        quillen(&["bt-check", "--n-max", "16", "--verify"]).status.code(),
        Some(0)
    );
}

#[test]
fn config_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("q.toml");
    std::fs::write(&cfg, "format = \"csv\"\nepsilon = 2.0\n").unwrap();
    let base = ["double-limit", "--n-max", "3", "--pair", "zhang:4/zhang:4", "--no-meta"];
    let run = |extra: &[&str], env: bool| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_quillen"));
        cmd.args(base).args(extra).env_remove("QUILLEN_CONFIG");
        if env {
            cmd.env("QUILLEN_CONFIG", &cfg);
        }
        cmd.output().unwrap()
    };
    // File beats defaults: CSV output and the loose epsilon makes the short sequence converge.
    let from_env = run(&[], true);
    let text = String::from_utf8(from_env.stdout).unwrap();
    assert!(text.starts_with("label,"), "{text}");
    assert!(text.contains(",converged,"));
    // Flags beat the file.
    let flags = run(&["--format", "json", "--epsilon", "1e-12"], true);
    let v: Value = serde_json::from_slice(&flags.stdout).unwrap();
    assert_eq!(v["outcomes"][0]["report"]["epsilon"], 1e-12);
    assert_eq!(v["outcomes"][0]["report"]["verdict"], "inconclusive");
    // Defaults without a file.
    let plain = run(&[], false);
    let v: Value = serde_json::from_slice(&plain.stdout).unwrap();
    assert_eq!(v["outcomes"][0]["report"]["epsilon"], 1e-6);
    // Unknown keys and invalid values are usage errors.
    std::fs::write(&cfg, "window = 1\n").unwrap();
    assert_eq!(run(&[], true).status.code(), Some(2));
    std::fs::write(&cfg, "colour = \"red\"\n").unwrap();
    assert_eq!(run(&[], true).status.code(), Some(2));
}

#[test]
fn jobs_flag_is_accepted() {
    let v = json(&["--jobs", "1", "closed-form", "--ms", "1", "--n-max", "0", "--no-meta"]);
    assert!(v["rows"][0]["limit"].is_null());
}
