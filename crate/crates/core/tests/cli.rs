use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_recordchar"));
    c.env_remove("RECORDCHAR_SEED");
    c
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn error_code(o: &Output) -> i64 {
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).expect("error JSON on stderr");
    assert!(err["error"]["message"].is_string());
    err["exit_code"].as_i64().unwrap()
}

#[test]
fn regress_reports_conditional_mean() {
    let o = run(bin()
        .args(["regress", "-c"])
        .arg(bundled("regress_mean.json")));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(
        rows[0],
        ["k", "r", "u", "v", "lhs", "rhs", "residual", "quad_err"]
    );
    let lhs: f64 = rows[1][4].parse().unwrap();
    assert!((lhs - 3.0).abs() < 1e-8);
}

#[test]
fn necessity_scan_has_27_small_rows() {
    for cfg in ["necessity_scan_exp01.json", "necessity_scan_exp2_05.json"] {
        let o = run(bin().args(["residual-scan", "-c"]).arg(bundled(cfg)));
        assert!(o.status.success());
        let rows = csv_rows(&stdout(&o));
        assert_eq!(rows.len(), 28);
        for row in &rows[1..] {
            let res: f64 = row[6].parse().unwrap();
            assert!(res.abs() < 1e-8, "{row:?}");
        }
    }
}

#[test]
fn every_bundled_config_runs() {
    let cases = [
        ("simulate", "simulate_exp.json"),
        ("simulate", "simulate_weibull.json"),
        ("density", "density_weibull.json"),
        ("regress", "regress_mean.json"),
        ("residual-scan", "sufficiency_scan_weibull.json"),
        ("residual-scan", "sufficiency_scan_pareto.json"),
        ("verify-identities", "verify.json"),
        ("mc-check", "mc_check.json"),
    ];
    for (sub, cfg) in cases {
        for fmt in ["csv", "json"] {
            let o = run(bin().args([sub, "--format", fmt, "-c"]).arg(bundled(cfg)));
            assert!(
                o.status.success(),
                "{sub} {cfg}: {}",
                String::from_utf8_lossy(&o.stderr)
            );
            if fmt == "json" {
                let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
                assert_eq!(v["config"]["schema"], 1, "{sub}");
            }
        }
    }
}

#[test]
fn malformed_config_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", "{\"schema\": 1, ");
    let out = dir.path().join("out.csv");
    let o = run(bin().args(["regress", "-c"]).arg(&cfg).arg("-o").arg(&out));
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_code(&o), 2);
    assert!(!out.exists());
    assert!(!dir.path().join("out.csv.config.json").exists());
}

#[test]
fn validation_runtime_and_io_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let reversed = write(
        dir.path(),
        "rev.json",
        r#"{"schema":1,"dist":{"family":"exponential","params":{"rate":1}},"g":{"family":"power"},"k":2,"r":2,"u":3,"v":1}"#,
    );
    let o = run(bin().args(["regress", "-c"]).arg(&reversed));
    assert_eq!((o.status.code(), error_code(&o)), (Some(2), 2));

    let schema2 = write(
        dir.path(),
        "s2.json",
        r#"{"schema":2,"dist":{"family":"exponential","params":{"rate":1}},"count":2,"replications":1}"#,
    );
    assert_eq!(
        run(bin().args(["simulate", "-c"]).arg(&schema2))
            .status
            .code(),
        Some(2)
    );

    let o = run(bin().args(["simulate", "--bogus"]));
    assert_eq!((o.status.code(), error_code(&o)), (Some(2), 2));

    let budget = write(
        dir.path(),
        "budget.json",
        r#"{"schema":1,"dist":{"family":"exponential","params":{"rate":1}},"count":40,"replications":1,"method":"naive_scan"}"#,
    );
    let o = run(bin().args(["simulate", "-c"]).arg(&budget));
    assert_eq!((o.status.code(), error_code(&o)), (Some(3), 3));

    let o = run(bin()
        .args(["simulate", "-c"])
        .arg(bundled("simulate_exp.json"))
        .arg("-o")
        .arg(dir.path().join("missing/dir/out.csv")));
    assert_eq!((o.status.code(), error_code(&o)), (Some(4), 4));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let a = run(bin()
        .args(["simulate", "-c"])
        .arg(bundled("simulate_weibull.json")));
    let b = run(bin()
        .args(["simulate", "-c"])
        .arg(bundled("simulate_weibull.json")));
    assert_eq!(a.stdout, b.stdout);
    let c = run(bin()
        .args(["simulate", "--seed", "12", "-c"])
        .arg(bundled("simulate_weibull.json")));
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sim.json",
        r#"{"schema":1,"dist":{"family":"exponential","params":{"rate":1}},"count":3,"replications":4}"#,
    );
    let plain = run(bin().args(["simulate", "-c"]).arg(&cfg));
    let env5 = run(bin()
        .env("RECORDCHAR_SEED", "5")
        .args(["simulate", "-c"])
        .arg(&cfg));
    let flag5 = run(bin().args(["simulate", "--seed", "5", "-c"]).arg(&cfg));
    let zero = run(bin().args(["simulate", "--seed", "0", "-c"]).arg(&cfg));
    assert_eq!(plain.stdout, zero.stdout);
    assert_eq!(env5.stdout, flag5.stdout);
    assert_ne!(plain.stdout, env5.stdout);
    let bad = run(bin()
        .env("RECORDCHAR_SEED", "abc")
        .args(["simulate", "-c"])
        .arg(&cfg));
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn output_file_gets_config_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("records.csv");
    let o = run(bin()
        .args(["simulate", "-c"])
        .arg(bundled("simulate_exp.json"))
        .arg("-o")
        .arg(&out));
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("rep,R1,R2,R3,R4,R5\n"));
    assert_eq!(text.lines().count(), 201);
    let side: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("records.csv.config.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(side["seed"], 7);
    assert_eq!(side["method"], "hazard_transform");
}

#[test]
fn goftest_reads_raw_and_simulated_records() {
    let dir = tempfile::tempdir().unwrap();
    let raw = write(
        dir.path(),
        "raw.csv",
        "x\n0.3\n0.1\n0.9\n1.4\n0.2\n2.2\n2.0\n3.1\n",
    );
    let o = run(bin()
        .args(["goftest", "--format", "json", "--null-reps", "1000", "-i"])
        .arg(&raw));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rep: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rep["records_available"], 5);
    let t = (1.4 - 0.5 * (0.3 + 3.1)) / (3.1 - 0.3);
    assert!((rep["statistic"].as_f64().unwrap() - t).abs() < 1e-12);

    let recs = dir.path().join("recs.csv");
    assert!(run(bin()
        .args(["simulate", "-c"])
        .arg(bundled("simulate_exp.json"))
        .arg("-o")
        .arg(&recs))
    .status
    .success());
    let o = run(bin()
        .args([
            "goftest",
            "--format",
            "json",
            "--input-kind",
            "records",
            "-i",
        ])
        .arg(&recs));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["reports"].as_array().unwrap().len(), 200);
    let rate = v["rejection_rate"].as_f64().unwrap();
    assert!(rate < 0.15, "rate {rate}");

    let o = run(bin().args(["goftest", "--n", "4", "-i"]).arg(&raw));
    assert_eq!((o.status.code(), error_code(&o)), (Some(2), 2));
    let o = run(bin().args(["goftest", "--null-reps", "10", "-i"]).arg(&raw));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn every_seeded_subcommand_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let recs = dir.path().join("recs.csv");
    run(bin()
        .args(["simulate", "-c"])
        .arg(bundled("simulate_weibull.json"))
        .arg("-o")
        .arg(&recs));
    let cmds: Vec<Vec<std::ffi::OsString>> = vec![
        vec![
            "simulate".into(),
            "-c".into(),
            bundled("simulate_exp.json").into(),
        ],
        vec![
            "mc-check".into(),
            "-c".into(),
            bundled("mc_check.json").into(),
        ],
        vec![
            "goftest".into(),
            "--input-kind".into(),
            "records".into(),
            "-i".into(),
            recs.clone().into(),
        ],
        vec![
            "residual-scan".into(),
            "-c".into(),
            bundled("necessity_scan_exp01.json").into(),
        ],
    ];
    for args in cmds {
        let a = run(bin().args(&args));
        let b = run(bin().args(&args));
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}
