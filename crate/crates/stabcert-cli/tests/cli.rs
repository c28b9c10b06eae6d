//! End-to-end command-line behavior: artifacts, exit codes, determinism and
//! the certificate round trip, driven through the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_stabcert")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn certify_toml() -> &'static str {
    "[gamma]\nb0 = 1.0\nb1 = 2.0\nd = 0.5\n\n[bound]\nc0 = 1.0\np = 1.0\n\n[run]\ncommand = \"certify\"\ng0 = 0.5\nmu0 = 1.0\n"
}

fn simulate_toml() -> &'static str {
    "[gamma]\nb0 = 1.0\nb1 = 2.0\nd = 1.0\n\n[bound]\nc0 = 0.0\np = 1.0\n\n[run]\ncommand = \"simulate\"\ng0 = 1.0\nmu0 = 0.9\nt_end = 3.0\nrel_tol = 1e-9\n\n[system]\ndim = 2\nomega = 0.0\nskew_seed = 7\nnonlinearity = \"zero\"\n"
}

#[test]
fn certify_writes_a_valid_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    write(&cfg, certify_toml());
    let out_dir = dir.path().join("out");
    let out = run(&["certify", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let json = std::fs::read_to_string(out_dir.join("certificate.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["valid"], true);
    assert_eq!(v["regime"], "AsymptoticStability");
    assert_eq!(v["gamma"]["b1"], 2.0);

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "certify");
    assert_eq!(manifest["artifacts"][0], "certificate.json");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn empty_config_exits_one_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.toml");
    write(&cfg, "");
    let out = run(&["certify", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty config"));
}

#[test]
fn command_mismatch_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    write(&cfg, certify_toml());
    let out = run(&["oracle", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn invariant_errors_map_to_exit_two() {
    use stabcert_cli::CliError;
    assert_eq!(CliError::Invariant("breach".into()).exit_code(), 2);
    assert_eq!(CliError::Validation("bad".into()).exit_code(), 1);
    assert_eq!(CliError::from(stabcert::Error::InvariantViolation("x".into())).exit_code(), 2);
    assert_eq!(CliError::from(stabcert::Error::InvalidCertificate).exit_code(), 1);
}

#[test]
fn simulate_reproduces_the_closed_form_final_norm() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.toml");
    write(&cfg, simulate_toml());
    let out_dir = dir.path().join("out");
    let out = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let csv = std::fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    let rows = stabcert::io::parse_series_csv(&csv, "t,norm").unwrap();
    let (t_last, n_last) = *rows.last().unwrap();
    assert_eq!(t_last, 3.0);
    // ||u(3)|| = (1/4)^2 for the d = 1 linear fixture.
    assert!((n_last - 0.0625).abs() <= 1e-9 * 0.0625, "final norm {n_last}");

    let check: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out_dir.join("envelope_check.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(check["checked"], true);
    assert_eq!(check["pass"], true);
}

#[test]
fn oracle_writes_trajectory_sidecar_and_dominance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("o.toml");
    write(
        &cfg,
        "[gamma]\nb0 = 1.0\nb1 = 2.0\nd = 0.5\n\n[bound]\nc0 = 1.0\np = 1.0\n\n[run]\ng0 = 0.5\nmu0 = 1.0\nt_end = 50.0\n",
    );
    let out_dir = dir.path().join("out");
    let out = run(&["oracle", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let csv = std::fs::read_to_string(out_dir.join("scalar.csv")).unwrap();
    assert!(csv.starts_with("t,g\n"));
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("scalar.json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["status"], "Completed");
    assert!(sidecar["tau"].is_null());
    assert!(sidecar["steps_accepted"].as_u64().unwrap() > 0);
    let dominance: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("dominance.json")).unwrap())
            .unwrap();
    assert_eq!(dominance["report"]["pass"], true);
}

#[test]
fn certificate_round_trip_reproduces_the_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    write(&cfg, certify_toml());
    let first = dir.path().join("first");
    assert!(run(&["certify", "--config", cfg.to_str().unwrap(), "--out", first.to_str().unwrap()])
        .status
        .success());
    let cert_path = first.join("certificate.json");

    let second = dir.path().join("second");
    let out = run(&["certify", "--config", cert_path.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let a = std::fs::read(first.join("certificate.json")).unwrap();
    let b = std::fs::read(second.join("certificate.json")).unwrap();
    assert_eq!(a, b, "re-ingested certificate must reproduce the document");
}

#[test]
fn tampered_certificate_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    write(&cfg, certify_toml());
    let first = dir.path().join("first");
    assert!(run(&["certify", "--config", cfg.to_str().unwrap(), "--out", first.to_str().unwrap()])
        .status
        .success());
    let cert_path = first.join("certificate.json");
    let tampered = std::fs::read_to_string(&cert_path)
        .unwrap()
        .replace("\"lhs\": 0.5", "\"lhs\": 0.4");
    write(&cert_path, &tampered);
    let out = run(&["certify", "--config", cert_path.to_str().unwrap(), "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

fn sweep_toml() -> &'static str {
    "[run]\ncommand = \"sweep\"\nseed = 11\n\n[sweep]\ninstances = 10\nmax_dim = 4\nomega_max = 10.0\nt_end = 100.0\nrel_tol = 1e-6\n"
}

#[test]
fn sweep_is_deterministic_across_runs_and_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    write(&cfg, sweep_toml());
    let mut outputs: Vec<Vec<u8>> = Vec::new();
    for (name, jobs) in [("a", "1"), ("b", "2"), ("c", "2")] {
        let out_dir = dir.path().join(name);
        let out = run(&[
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--jobs",
            jobs,
        ]);
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        outputs.push(std::fs::read(out_dir.join("sweep.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "CSV must not depend on worker count");
    assert_eq!(outputs[1], outputs[2], "CSV must be identical across runs");
}

fn plot_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let cfg = dir.join("s.toml");
    write(&cfg, simulate_toml());
    let out_dir = dir.join("simout");
    assert!(run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()])
        .status
        .success());
    (out_dir.join("trajectory.csv"), out_dir.join("certificate.json"))
}

#[test]
fn plot_renders_norm_and_envelope_curves() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, cert) = plot_fixture(dir.path());
    let out_dir = dir.path().join("plot");
    let out = run(&[
        "plot",
        "--csv",
        csv.to_str().unwrap(),
        "--kind",
        "norm-vs-envelope",
        "--certificate",
        cert.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--no-timestamp",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let svg =
        std::fs::read_to_string(out_dir.join("trajectory_norm_vs_envelope.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<path").count(), 2);
    assert!(!svg.contains("generated"), "--no-timestamp must drop the comment");

    // Determinism of the SVG under --no-timestamp.
    let out_dir2 = dir.path().join("plot2");
    assert!(run(&[
        "plot",
        "--csv",
        csv.to_str().unwrap(),
        "--kind",
        "norm-vs-envelope",
        "--certificate",
        cert.to_str().unwrap(),
        "--out",
        out_dir2.to_str().unwrap(),
        "--no-timestamp",
    ])
    .status
    .success());
    let svg2 =
        std::fs::read_to_string(out_dir2.join("trajectory_norm_vs_envelope.svg")).unwrap();
    assert_eq!(svg, svg2);
}

#[test]
fn plot_rejects_empty_or_mismatched_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("empty.csv");
    write(&csv, "");
    let out = run(&[
        "plot",
        "--csv",
        csv.to_str().unwrap(),
        "--kind",
        "matching-error",
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));

    // Wrong header for the requested kind.
    let csv = dir.path().join("wrong.csv");
    write(&csv, "t,g\n0,1\n1,0.5\n");
    let out = run(&[
        "plot",
        "--csv",
        csv.to_str().unwrap(),
        "--kind",
        "matching-error",
        "--out",
        dir.path().join("o2").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn levinson_pipeline_emits_table_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("l.toml");
    write(
        &cfg,
        "[run]\ncommand = \"levinson\"\n\n[levinson]\na = [[0.0, 1.0], [-1.0, 0.0]]\nu0 = [1.0, 0.0]\nb_family = \"exp\"\nb_rate = 1.0\nt_max = 25.0\ntol = 1e-9\nsample_times = [2.0, 5.0, 10.0]\n",
    );
    let out_dir = dir.path().join("out");
    let out = run(&["levinson", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let csv = std::fs::read_to_string(out_dir.join("matching.csv")).unwrap();
    let rows = stabcert::io::parse_matching_csv(&csv).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.ratio <= 1.0 + 1e-6));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["limit_cauchy_ok"], true);
    assert!(report["predicted_contraction"].as_f64().unwrap() < 1.0);

    // The matching table feeds the second plot kind.
    let plot_dir = dir.path().join("plot");
    let out = run(&[
        "plot",
        "--csv",
        out_dir.join("matching.csv").to_str().unwrap(),
        "--kind",
        "matching-error",
        "--out",
        plot_dir.to_str().unwrap(),
        "--no-timestamp",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(plot_dir.join("matching_matching_error.svg")).unwrap();
    assert_eq!(svg.matches("<path").count(), 2);
}
