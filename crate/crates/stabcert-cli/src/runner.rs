//! The certify / simulate / oracle / levinson / plot pipelines: read a config,
//! run the computation, write machine-readable artifacts plus a manifest.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use stabcert::asymptotic::{
    levinson_match, matching_error_report, PerturbationFamily, PerturbedSystem,
};
use stabcert::comparison::integrate_scalar_opts;
use stabcert::evolution::{simulate_sampled, verify_trajectory_envelope, NonlinearitySpec};
use stabcert::grid::report_times;
use stabcert::io;
use stabcert::linalg::{seeded_unit_vector, spectral_norm};
use stabcert::{
    certify, check_dominance, Certificate, Coefficient, ConditionId, DominanceReport,
    ScalarProblem, TimeVaryingSystem,
};

use crate::config::Config;
use crate::manifest::Manifest;
use crate::plot::{matching_error_svg, norm_vs_envelope_svg, PlotKind};
use crate::CliError;

/// Shared command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub rel_tol: Option<f64>,
    pub jobs: Option<usize>,
    pub no_timestamp: bool,
}

pub struct LoadedConfig {
    pub config: Config,
    pub raw: Vec<u8>,
}

pub fn load_config(path: &Path) -> Result<LoadedConfig, CliError> {
    let raw = std::fs::read(path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(raw.clone())
        .map_err(|_| CliError::validation("config is not valid UTF-8"))?;
    let config = Config::from_toml_str(&text)?;
    Ok(LoadedConfig { config, raw })
}

fn ensure_out_dir(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::validation(format!("cannot create {}: {e}", out.display())))
}

fn effective(run: &crate::config::RunSection, over: &Overrides) -> (u64, f64) {
    (over.seed.unwrap_or(run.seed), over.rel_tol.unwrap_or(run.rel_tol))
}

// --- certify -----------------------------------------------------------------

/// Certify from a TOML config, or re-certify a certificate JSON document (the
/// round-trip path: the reproduced ledger must match the ingested one).
pub fn run_certify(config_path: &Path, out: &Path, over: &Overrides) -> Result<(), CliError> {
    ensure_out_dir(out)?;
    let raw = std::fs::read(config_path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", config_path.display())))?;

    let cert = if config_path.extension().is_some_and(|e| e == "json") {
        let text = String::from_utf8(raw.clone())
            .map_err(|_| CliError::validation("certificate JSON is not valid UTF-8"))?;
        recertify_from_json(&text)?
    } else {
        let text = String::from_utf8(raw.clone())
            .map_err(|_| CliError::validation("config is not valid UTF-8"))?;
        let config = Config::from_toml_str(&text)?;
        config.check_command("certify")?;
        let gamma = config.gamma_model()?;
        let bound = config.perturbation_bound()?;
        certify(&gamma, bound, config.run.g0, config.run.mu0)?
    };

    std::fs::write(out.join("certificate.json"), cert.to_json_string() + "\n")?;
    let seed = over.seed.unwrap_or(0);
    Manifest::new("certify", &raw, seed, vec!["certificate.json".into()]).write(out)?;
    Ok(())
}

/// Parse a certificate document, re-run the certification from its recorded
/// parameters and demand the identical ledger.
pub fn recertify_from_json(text: &str) -> Result<Certificate, CliError> {
    let ingested = Certificate::from_json_str(text)?;
    let mu0 = ingested.mu0();
    let g0 = ingested
        .checks()
        .iter()
        .find(|c| matches!(c.id, ConditionId::Mu0Strict | ConditionId::General_18))
        .map(|c| c.lhs / mu0)
        .ok_or_else(|| {
            CliError::validation("certificate ledger lacks the initial-data check")
        })?;
    let reproduced = certify(ingested.gamma(), *ingested.bound(), g0, Some(mu0))?;
    if reproduced.checks() != ingested.checks() || reproduced.valid() != ingested.valid() {
        return Err(CliError::validation(
            "re-certification does not reproduce the ingested ledger",
        ));
    }
    Ok(reproduced)
}

// --- simulate ----------------------------------------------------------------

#[derive(Serialize)]
struct EnvelopeCheckDoc {
    checked: bool,
    certificate_valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pass: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_product: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    at: Option<f64>,
}

pub fn build_system_from_config(
    config: &Config,
    gamma: stabcert::GammaModel,
) -> Result<TimeVaryingSystem, CliError> {
    let sys = config
        .system
        .as_ref()
        .ok_or_else(|| CliError::validation("missing [system] section"))?;
    let bound = config.perturbation_bound()?;
    let nl = match sys.nonlinearity.as_str() {
        "zero" => NonlinearitySpec::Zero,
        "radial" => NonlinearitySpec::Radial { c0: bound.c0(), p: bound.p() },
        "rotated" => {
            NonlinearitySpec::Rotated { c0: bound.c0(), p: bound.p(), seed: sys.rotation_seed }
        }
        "truncated" => NonlinearitySpec::Truncated {
            c0: bound.c0(),
            p: bound.p(),
            cap: sys.cap.ok_or_else(|| {
                CliError::validation("truncated nonlinearity needs a cap value")
            })?,
        },
        other => {
            return Err(CliError::validation(format!(
                "unknown nonlinearity {other:?} (zero | radial | rotated | truncated)"
            )))
        }
    };
    TimeVaryingSystem::dissipative_plus_skew(sys.dim, gamma, sys.omega, sys.skew_seed, nl)
        .map_err(CliError::from)
}

pub fn run_simulate(config_path: &Path, out: &Path, over: &Overrides) -> Result<(), CliError> {
    ensure_out_dir(out)?;
    let loaded = load_config(config_path)?;
    let config = &loaded.config;
    config.check_command("simulate")?;
    let gamma = config.gamma_model()?;
    let bound = config.perturbation_bound()?;
    let (seed, rel_tol) = effective(&config.run, over);

    let system = build_system_from_config(config, gamma.clone())?;
    let sys_section = config.system.as_ref().expect("validated by build_system_from_config");
    let direction = seeded_unit_vector(sys_section.dim, sys_section.direction_seed ^ seed);
    let u0 = direction * config.run.g0;

    let report = report_times(config.run.t_end, config.run.report_points.max(200));
    let traj = simulate_sampled(&system, &u0, config.run.t_end, rel_tol, &report)?;

    std::fs::write(out.join("trajectory.csv"), io::norm_csv_string(&traj.times, &traj.norms))?;
    let mut artifacts = vec!["trajectory.csv".to_string()];
    if config.run.write_states {
        std::fs::write(out.join("states.csv"), io::states_csv_string(&traj.times, &traj.states))?;
        artifacts.push("states.csv".into());
    }

    let cert = certify(&gamma, bound, config.run.g0, config.run.mu0)?;
    std::fs::write(out.join("certificate.json"), cert.to_json_string() + "\n")?;
    artifacts.push("certificate.json".into());

    let check = if cert.valid() {
        if !traj.complete() {
            return Err(CliError::Invariant(format!(
                "certified trajectory truncated at t = {}",
                traj.truncated_at.unwrap_or(f64::NAN)
            )));
        }
        let report = verify_trajectory_envelope(&traj, &cert)?;
        EnvelopeCheckDoc {
            checked: true,
            certificate_valid: true,
            reason: None,
            pass: Some(report.pass),
            max_product: Some(report.max_product),
            at: Some(report.at),
        }
    } else {
        EnvelopeCheckDoc {
            checked: false,
            certificate_valid: false,
            reason: Some("certificate conditions do not hold".into()),
            pass: None,
            max_product: None,
            at: None,
        }
    };
    std::fs::write(
        out.join("envelope_check.json"),
        serde_json::to_string_pretty(&check).expect("serialization cannot fail") + "\n",
    )?;
    artifacts.push("envelope_check.json".into());
    Manifest::new("simulate", &loaded.raw, seed, artifacts).write(out)?;

    if check.checked && check.pass == Some(false) {
        return Err(CliError::Invariant(format!(
            "certified trajectory breached its envelope: max product {} at t = {}",
            check.max_product.unwrap_or(f64::NAN),
            check.at.unwrap_or(f64::NAN)
        )));
    }
    Ok(())
}

// --- oracle ------------------------------------------------------------------

#[derive(Serialize)]
struct DominanceDoc {
    checked: bool,
    certificate_valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<DominanceReport>,
}

pub fn run_oracle(config_path: &Path, out: &Path, over: &Overrides) -> Result<(), CliError> {
    ensure_out_dir(out)?;
    let loaded = load_config(config_path)?;
    let config = &loaded.config;
    config.check_command("oracle")?;
    let gamma = config.gamma_model()?;
    let bound = config.perturbation_bound()?;
    let (seed, rel_tol) = effective(&config.run, over);

    let problem = ScalarProblem::new(
        gamma.clone(),
        config.oracle_coefficient()?,
        Coefficient::Zero,
        bound.p(),
        config.run.g0,
    )?;
    let report = report_times(config.run.t_end, config.run.report_points.max(200));
    let traj = integrate_scalar_opts(
        &problem,
        config.run.t_end,
        rel_tol,
        &report,
        config.run.blow_up_threshold,
    )?;

    std::fs::write(out.join("scalar.csv"), io::scalar_csv_string(&traj.times, &traj.values))?;
    std::fs::write(out.join("scalar.json"), io::scalar_sidecar_json(&traj) + "\n")?;

    let cert = certify(&gamma, bound, config.run.g0, config.run.mu0)?;
    let doc = if cert.valid() {
        // A blow-up under a valid certificate surfaces as an invariant error.
        let report = check_dominance(&traj, &cert)?;
        DominanceDoc {
            checked: true,
            certificate_valid: true,
            reason: None,
            report: Some(report),
        }
    } else {
        DominanceDoc {
            checked: false,
            certificate_valid: false,
            reason: Some("certificate conditions do not hold".into()),
            report: None,
        }
    };
    std::fs::write(
        out.join("dominance.json"),
        serde_json::to_string_pretty(&doc).expect("serialization cannot fail") + "\n",
    )?;
    Manifest::new(
        "oracle",
        &loaded.raw,
        seed,
        vec!["scalar.csv".into(), "scalar.json".into(), "dominance.json".into()],
    )
    .write(out)?;

    if let Some(r) = &doc.report {
        if !r.pass {
            return Err(CliError::Invariant(format!(
                "oracle trajectory breached the certified envelope: max product {} at t = {}",
                r.max_product, r.at
            )));
        }
    }
    Ok(())
}

// --- levinson ----------------------------------------------------------------

#[derive(Serialize)]
struct MatchingReportDoc {
    t_start: f64,
    t_max: f64,
    predicted_contraction: f64,
    observed_contraction: f64,
    max_successive_ratio: f64,
    iterations: usize,
    error_budget: f64,
    sup_v_norm: f64,
    limit_cauchy_ok: bool,
    limit_estimate: f64,
}

pub fn run_levinson(config_path: &Path, out: &Path, over: &Overrides) -> Result<(), CliError> {
    ensure_out_dir(out)?;
    let loaded = load_config(config_path)?;
    let config = &loaded.config;
    config.check_command("levinson")?;
    let lev = config
        .levinson
        .as_ref()
        .ok_or_else(|| CliError::validation("missing [levinson] section"))?;
    let seed = over.seed.unwrap_or(config.run.seed);

    let n = lev.a.len();
    if n == 0 || lev.a.iter().any(|row| row.len() != n) {
        return Err(CliError::validation("[levinson] a must be a square matrix"));
    }
    if lev.u0.len() != n {
        return Err(CliError::validation("[levinson] u0 must match the matrix dimension"));
    }
    let a = DMatrix::from_fn(n, n, |i, j| lev.a[i][j]);
    let u0 = DVector::from_vec(lev.u0.clone());

    let coeff = if lev.b_seed == 0 {
        DMatrix::identity(n, n) * lev.b_scale
    } else {
        let raw = stabcert::linalg::seeded_unit_skew(n, lev.b_seed)
            + DMatrix::from_diagonal_element(n, n, 0.5);
        let norm = spectral_norm(&raw);
        raw * (lev.b_scale / norm)
    };
    let family = match lev.b_family.as_str() {
        "exp" => PerturbationFamily::exp_decay(
            lev.b_rate
                .ok_or_else(|| CliError::validation("exp family needs b_rate"))?,
            coeff,
        )?,
        "power" => PerturbationFamily::power_decay(
            lev.b_exponent
                .ok_or_else(|| CliError::validation("power family needs b_exponent"))?,
            coeff,
        )?,
        other => {
            return Err(CliError::validation(format!(
                "unknown perturbation family {other:?} (exp | power)"
            )))
        }
    };
    let sys = PerturbedSystem::with_horizon(a, family, lev.propagator_horizon, 400)?;
    let pair = levinson_match(&sys, &u0, lev.t_start, lev.t_max, lev.tol)?;
    let report = matching_error_report(&pair, &lev.sample_times)?;

    std::fs::write(out.join("matching.csv"), io::matching_csv_string(&report.rows))?;
    let doc = MatchingReportDoc {
        t_start: pair.t_start(),
        t_max: pair.t_max(),
        predicted_contraction: pair.predicted_contraction(),
        observed_contraction: pair.observed_contraction(),
        max_successive_ratio: pair.max_successive_ratio(),
        iterations: pair.iterations(),
        error_budget: pair.error_budget(),
        sup_v_norm: pair.sup_v_norm(),
        limit_cauchy_ok: report.limit_cauchy_ok,
        limit_estimate: report.limit_estimate,
    };
    std::fs::write(
        out.join("report.json"),
        serde_json::to_string_pretty(&doc).expect("serialization cannot fail") + "\n",
    )?;
    Manifest::new(
        "levinson",
        &loaded.raw,
        seed,
        vec!["matching.csv".into(), "report.json".into()],
    )
    .write(out)?;
    Ok(())
}

// --- plot --------------------------------------------------------------------

pub fn run_plot(
    csv_path: &Path,
    kind: PlotKind,
    certificate_path: Option<&Path>,
    out: &Path,
    no_timestamp: bool,
) -> Result<(), CliError> {
    ensure_out_dir(out)?;
    let raw = std::fs::read(csv_path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", csv_path.display())))?;
    let text = String::from_utf8(raw.clone())
        .map_err(|_| CliError::validation("CSV is not valid UTF-8"))?;
    let timestamp = if no_timestamp {
        None
    } else {
        Some(chrono_free_timestamp())
    };

    let stem = csv_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("plot")
        .to_string();
    let (svg, name) = match kind {
        PlotKind::NormVsEnvelope => {
            let rows = stabcert::io::parse_series_csv(&text, "t,norm")?;
            let cert_path = certificate_path.ok_or_else(|| {
                CliError::validation("norm-vs-envelope needs --certificate <json>")
            })?;
            let cert_text = std::fs::read_to_string(cert_path)
                .map_err(|e| CliError::validation(format!("cannot read certificate: {e}")))?;
            let cert = Certificate::from_json_str(&cert_text)?;
            (
                norm_vs_envelope_svg(&rows, &cert, timestamp.as_deref())?,
                format!("{stem}_norm_vs_envelope.svg"),
            )
        }
        PlotKind::MatchingError => {
            let rows = stabcert::io::parse_matching_csv(&text)?;
            (
                matching_error_svg(&rows, timestamp.as_deref())?,
                format!("{stem}_matching_error.svg"),
            )
        }
    };
    std::fs::write(out.join(&name), svg)?;
    Manifest::new("plot", &raw, 0, vec![name]).write(out)?;
    Ok(())
}

/// Wall-clock timestamp without pulling in a date dependency; seconds since
/// the epoch are enough to mark a file as freshly generated.
fn chrono_free_timestamp() -> String {
    use std::time::{SystemTime, UNIX_EPOCH};
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix:{secs}")
}

/// Arc-wrapped matrix handle helper for tests.
pub fn constant_matrix_handle(
    m: DMatrix<f64>,
) -> Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync> {
    Arc::new(move |_t| m.clone())
}
