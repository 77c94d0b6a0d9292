use std::path::Path;
use std::process::{Command, Output};

fn tomoforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tomoforge")).args(args).output().expect("binary runs")
}

fn with_out(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tomoforge")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

#[test]
fn missing_out_is_a_usage_error() {
    let o = tomoforge(&["schur-validate", "--n", "2", "--d", "2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_flag_and_subcommand_exit_one() {
    assert_eq!(
        tomoforge(&["schur-validate", "--n", "2", "--d", "2", "--bogus", "1", "--out", "x"]).status.code(),
        Some(1)
    );
    assert_eq!(tomoforge(&["frobnicate", "--out", "x"]).status.code(), Some(1));
}

#[test]
fn validation_errors_exit_one_and_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = with_out(&["tomography", "--algorithm", "mix-gps", "--d", "2", "--r", "3", "--n", "2"], &out);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
    let o = with_out(&["tomography", "--algorithm", "nonsense", "--n", "2"], &out);
    assert_eq!(o.status.code(), Some(1));
    let o = with_out(&["tomography", "--algorithm", "gps", "--d", "2", "--n", "2", "--state", "maximally-mixed"], &out);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn schur_validate_writes_json_envelope() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("schur.json");
    let o = with_out(&["schur-validate", "--n", "3", "--d", "2"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.ends_with('\n'));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 16);
    assert_eq!(v["rng"], "chacha20/sha256-stream-v1");
    assert_eq!(v["config"]["command"], "schur-validate");
    assert_eq!(v["report"]["dimension_sum"], 8);
    assert!(v["report"]["unitarity_residual"].as_f64().unwrap() < 1e-9);
}

#[test]
fn tomography_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = with_out(
        &["tomography", "--algorithm", "mix-gkkt", "--d", "2", "--r", "2", "--n", "50", "--trials", "3"],
        &out,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.split("\r\n").collect();
    assert!(lines[0].starts_with("# tomoforge config_hash="));
    assert_eq!(lines[1], "trial,n,d,r,algorithm,fidelity,trace_distance,lambda,seed");
    assert_eq!(lines.len(), 2 + 3 + 1);
    assert_eq!(lines.last(), Some(&""));
    let fields: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(fields[0], "0");
    assert_eq!(fields[4], "mix-gkkt");
    let mantissa = fields[5].split('e').next().unwrap();
    assert_eq!(mantissa.trim_start_matches('-').replace('.', "").len(), 17);
    let f: f64 = fields[5].parse().unwrap();
    assert!((0.0..=1.0).contains(&f));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"algorithm": "gkkt", "n": 40, "trials": 4, "seed": 11}"#).unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = dir.path().join("a.csv");
    let overridden = dir.path().join("b.csv");
    let explicit = dir.path().join("c.csv");
    assert_eq!(with_out(&["tomography", "--config", cfg], &from_file).status.code(), Some(0));
    assert_eq!(with_out(&["tomography", "--config", cfg, "--trials", "2"], &overridden).status.code(), Some(0));
    assert_eq!(
        with_out(&["tomography", "--algorithm", "gkkt", "--n", "40", "--trials", "2", "--seed", "11"], &explicit)
            .status
            .code(),
        Some(0)
    );
    let a = std::fs::read_to_string(&from_file).unwrap();
    let b = std::fs::read_to_string(&overridden).unwrap();
    assert_eq!(a.split("\r\n").count(), 2 + 4 + 1);
    assert_eq!(b.split("\r\n").count(), 2 + 2 + 1);
    assert_eq!(b, std::fs::read_to_string(&explicit).unwrap());
}

#[test]
fn output_path_does_not_change_content() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["k-entangled", "--n-total", "4", "--k", "2", "--trials", "2", "--seed", "5"];
    let a = dir.path().join("one.csv");
    let b = dir.path().join("two.csv");
    assert_eq!(with_out(&args, &a).status.code(), Some(0));
    assert_eq!(with_out(&args, &b).status.code(), Some(0));
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn seed_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let base = ["tomography", "--algorithm", "gkkt", "--n", "30", "--trials", "2"];
    with_out(&[&base[..], &["--seed", "1"]].concat(), &a);
    with_out(&[&base[..], &["--seed", "2"]].concat(), &b);
    assert_ne!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn shadows_with_identity_observable_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("obs.json");
    std::fs::write(&obs, r#"{"observables":[{"id":"I","re":[[1,0],[0,1]]}]}"#).unwrap();
    let out = dir.path().join("s.csv");
    let o = with_out(&["shadows", "--observables", obs.to_str().unwrap(), "--n-prime", "3", "--k-mom", "3"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let row: Vec<&str> = text.split("\r\n").nth(2).unwrap().split(',').collect();
    assert_eq!(row[1], "I");
    assert!(row[4].parse::<f64>().unwrap() < 1e-9);
}

#[test]
fn oversized_observable_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("obs.json");
    std::fs::write(&obs, r#"{"observables":[{"id":"2Z","re":[[2,0],[0,-2]]}]}"#).unwrap();
    let o = with_out(&["shadows", "--observables", obs.to_str().unwrap()], &dir.path().join("s.csv"));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn state_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("state.json");
    let first = dir.path().join("a.csv");
    let o = with_out(
        &["tomography", "--algorithm", "standard", "--n", "20", "--seed", "4", "--dump-state", dump.to_str().unwrap()],
        &first,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let second = dir.path().join("b.csv");
    let o = with_out(
        &[
            "tomography",
            "--algorithm",
            "standard",
            "--n",
            "20",
            "--state",
            "file",
            "--state-file",
            dump.to_str().unwrap(),
        ],
        &second,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}
