//! Seeded random parameter sweep: draw certified instances, simulate each to
//! the horizon, check envelope dominance, and emit one summary row per
//! instance in instance-index order regardless of worker scheduling.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use stabcert::evolution::{simulate, verify_trajectory_envelope, NonlinearitySpec};
use stabcert::io::fmt_f64;
use stabcert::linalg::seeded_unit_vector;
use stabcert::{certify, search_b1, GammaModel, PerturbationBound, TimeVaryingSystem};

use crate::config::SweepSection;
use crate::manifest::Manifest;
use crate::runner::{load_config, Overrides};
use crate::CliError;

/// One drawn instance and its verdicts.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub instance: usize,
    pub dim: usize,
    pub omega: f64,
    pub skew_seed: u64,
    pub f_kind: &'static str,
    pub b0: f64,
    pub b1: f64,
    pub d: f64,
    pub c0: f64,
    pub p: f64,
    pub g0: f64,
    pub mu0: f64,
    pub valid: bool,
    pub dominance_pass: bool,
    pub max_product: f64,
    pub at: f64,
}

pub const SWEEP_HEADER: &str =
    "instance,dim,omega,skew_seed,f_kind,b0,b1,d,c0,p,g0,mu0,valid,dominance_pass,max_product,at";

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.instance,
            r.dim,
            fmt_f64(r.omega),
            r.skew_seed,
            r.f_kind,
            fmt_f64(r.b0),
            fmt_f64(r.b1),
            fmt_f64(r.d),
            fmt_f64(r.c0),
            fmt_f64(r.p),
            fmt_f64(r.g0),
            fmt_f64(r.mu0),
            r.valid,
            r.dominance_pass,
            fmt_f64(r.max_product),
            fmt_f64(r.at)
        ));
    }
    out
}

/// Distinct stream per instance: one seed, decorrelated by the instance index.
fn instance_rng(seed: u64, instance: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (instance as u64).wrapping_mul(0x9e3779b97f4a7c15))
}

/// Draw and run one certified instance. Parameters come from the feasibility
/// search, so every instance certifies; a dominance failure is therefore a
/// mathematical-invariant violation, not a data condition.
pub fn run_instance(
    seed: u64,
    instance: usize,
    sweep: &SweepSection,
) -> Result<SweepRow, CliError> {
    let mut rng = instance_rng(seed, instance);
    let dim = rng.random_range(1..=sweep.max_dim.max(1));
    let omega = rng.random_range(0.0..=sweep.omega_max.max(0.0));
    let skew_seed: u64 = rng.random();
    let b0 = 10f64.powf(rng.random_range(-1.0..1.0));
    let d = rng.random_range(0.05..=1.0);
    let p = rng.random_range(0.2..=3.0);
    let c0 = rng.random_range(0.0..=5.0);
    let g0 = rng.random_range(0.05..=2.0);
    let mu0 = stabcert::certificate::default_mu0(g0);
    let direction_seed: u64 = rng.random();
    let f_kind = match instance % 3 {
        0 => "radial",
        1 => "rotated",
        _ => "truncated",
    };

    let bound = PerturbationBound::new(c0, p)?;
    let b1 = search_b1(b0, d, &bound, mu0)?;
    let gamma = GammaModel::power_law(b0, b1, d)?;
    let cert = certify(&gamma, bound, g0, Some(mu0))?;

    let nl = match f_kind {
        "radial" => NonlinearitySpec::Radial { c0, p },
        "rotated" => NonlinearitySpec::Rotated { c0, p, seed: skew_seed ^ 0xa5a5 },
        _ => NonlinearitySpec::Truncated { c0, p, cap: 2.0 * g0.max(0.1) },
    };
    let system = TimeVaryingSystem::dissipative_plus_skew(dim, gamma, omega, skew_seed, nl)?;
    let u0 = seeded_unit_vector(dim, direction_seed) * g0;

    let (dominance_pass, max_product, at) = if cert.valid() {
        let traj = simulate(&system, &u0, sweep.t_end, sweep.rel_tol)?;
        if !traj.complete() {
            (false, f64::INFINITY, traj.truncated_at.unwrap_or(f64::NAN))
        } else {
            let report = verify_trajectory_envelope(&traj, &cert)?;
            (report.pass, report.max_product, report.at)
        }
    } else {
        (false, f64::NAN, f64::NAN)
    };

    Ok(SweepRow {
        instance,
        dim,
        omega,
        skew_seed,
        f_kind,
        b0,
        b1,
        d,
        c0,
        p,
        g0,
        mu0,
        valid: cert.valid(),
        dominance_pass,
        max_product,
        at,
    })
}

/// Run the whole sweep on a worker pool; rows come back in instance order.
pub fn run_sweep_rows(
    seed: u64,
    sweep: &SweepSection,
    jobs: Option<usize>,
) -> Result<Vec<SweepRow>, CliError> {
    let compute = || -> Result<Vec<SweepRow>, CliError> {
        (0..sweep.instances)
            .into_par_iter()
            .map(|i| run_instance(seed, i, sweep))
            .collect()
    };
    match jobs {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::validation(format!("worker pool: {e}")))?;
            pool.install(compute)
        }
        _ => compute(),
    }
}

pub fn run_sweep_command(
    config_path: &Path,
    out: &Path,
    over: &Overrides,
) -> Result<(), CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::validation(format!("cannot create {}: {e}", out.display())))?;
    let loaded = load_config(config_path)?;
    let config = &loaded.config;
    config.check_command("sweep")?;
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::validation("missing [sweep] section"))?;
    let seed = over.seed.unwrap_or(config.run.seed);

    let rows = run_sweep_rows(seed, sweep, over.jobs)?;
    std::fs::write(out.join("sweep.csv"), rows_to_csv(&rows))?;
    Manifest::new("sweep", &loaded.raw, seed, vec!["sweep.csv".into()]).write(out)?;

    let breaches: Vec<usize> = rows
        .iter()
        .filter(|r| r.valid && !r.dominance_pass)
        .map(|r| r.instance)
        .collect();
    if !breaches.is_empty() {
        return Err(CliError::Invariant(format!(
            "{} certified instance(s) breached their envelope: {:?}",
            breaches.len(),
            breaches
        )));
    }
    Ok(())
}
