//! Brute-force scalar oracle: integrate the comparison equation
//! `g' = -γ(t) g + a(t) g^(1+p) + β(t)` with equality, detect finite-time
//! blow-up, and check that certified envelopes dominate the solution.
//!
//! The equality solution dominates every function satisfying the inequality
//! with the same data, so dominance of the oracle trajectory is the sharp
//! empirical test of a certificate.

use serde::Serialize;

use crate::certificate::Certificate;
use crate::error::{Error, Result};
use crate::ode::{integrate, SolverOptions, Termination};
use crate::rates::{Coefficient, ForcingBound, GammaModel};

/// Escape threshold: growth beyond this is treated as finite-time blow-up.
pub const BLOW_UP_THRESHOLD: f64 = 1e12;

/// Data of the scalar comparison equation.
#[derive(Debug, Clone)]
pub struct ScalarProblem {
    pub gamma: GammaModel,
    pub a: Coefficient,
    pub beta: ForcingBound,
    pub p: f64,
    pub g0: f64,
}

impl ScalarProblem {
    pub fn new(
        gamma: GammaModel,
        a: Coefficient,
        beta: ForcingBound,
        p: f64,
        g0: f64,
    ) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("p must be > 0, got {p}")));
        }
        if !(g0 >= 0.0 && g0.is_finite()) {
            return Err(Error::InvalidParameter(format!("g0 must be >= 0, got {g0}")));
        }
        Ok(Self { gamma, a, beta, p, g0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ScalarStatus {
    Completed,
    /// Escaped in finite time; `tau` is the last accepted time.
    BlowUp { tau: f64 },
}

/// Scalar trajectory on `[0, T]` (or up to the blow-up time).
#[derive(Debug, Clone)]
pub struct ScalarTrajectory {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub status: ScalarStatus,
    pub diagnostics: crate::ode::Diagnostics,
}

/// Integrate the comparison equation, recording every accepted step.
pub fn integrate_scalar(
    problem: &ScalarProblem,
    t_end: f64,
    rel_tol: f64,
) -> Result<ScalarTrajectory> {
    integrate_scalar_sampled(problem, t_end, rel_tol, &[])
}

/// As [`integrate_scalar`] but additionally samples dense output at the given
/// (sorted) report times, for comparisons on shared grids.
pub fn integrate_scalar_sampled(
    problem: &ScalarProblem,
    t_end: f64,
    rel_tol: f64,
    report: &[f64],
) -> Result<ScalarTrajectory> {
    integrate_scalar_opts(problem, t_end, rel_tol, report, BLOW_UP_THRESHOLD)
}

/// Full-control entry point; `blow_up_threshold` is configurable so harnesses
/// can surface it.
pub fn integrate_scalar_opts(
    problem: &ScalarProblem,
    t_end: f64,
    rel_tol: f64,
    report: &[f64],
    blow_up_threshold: f64,
) -> Result<ScalarTrajectory> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_end must be > 0, got {t_end}")));
    }
    let opts = SolverOptions {
        rel_tol,
        threshold: Some(blow_up_threshold),
        nonnegative: true,
        ..Default::default()
    };
    let one_plus_p = 1.0 + problem.p;
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let g = y[0];
        let gamma = problem.gamma.eval(t)?;
        let a = problem.a.eval(t)?;
        let beta = problem.beta.eval(t)?;
        // Stage values may undershoot zero; the superlinear term needs g >= 0.
        let g_pos = g.max(0.0);
        dy[0] = -gamma * g + a * g_pos.powf(one_plus_p) + beta;
        Ok(())
    };
    let sol = integrate(rhs, 0.0, t_end, &[problem.g0], report, &opts)?;
    let status = match sol.termination {
        Termination::Reached => ScalarStatus::Completed,
        Termination::Threshold { t } => ScalarStatus::BlowUp { tau: t },
        Termination::StepUnderflow { t } => ScalarStatus::BlowUp { tau: t },
        Termination::StepLimit { t } => {
            return Err(Error::InvariantViolation(format!(
                "step limit reached at t = {t}; the comparison equation should be nonstiff"
            )))
        }
    };
    let (times, states) = sol.merged_series();
    let values = states.iter().map(|s| s[0]).collect();
    Ok(ScalarTrajectory { times, values, status, diagnostics: sol.diagnostics })
}

/// Result of an envelope-dominance check: the largest observed `g(t)·μ(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominanceReport {
    pub pass: bool,
    pub max_product: f64,
    pub at: f64,
}

/// Dominated iff `g(t)·μ(t) < 1` at every sample. Products are formed in log
/// space so late-time weight growth cannot overflow the check.
pub fn dominance_over_samples(
    times: &[f64],
    values: &[f64],
    cert: &Certificate,
) -> Result<DominanceReport> {
    if !cert.valid() {
        return Err(Error::InvalidCertificate);
    }
    if times.is_empty() || times.len() != values.len() {
        return Err(Error::InvalidParameter("empty or mismatched sample series".into()));
    }
    let mut max_product = f64::NEG_INFINITY;
    let mut at = times[0];
    for (&t, &g) in times.iter().zip(values) {
        let product = if g <= 0.0 { 0.0 } else { (g.ln() + cert.mu_log(t)?).exp() };
        if product > max_product {
            max_product = product;
            at = t;
        }
    }
    Ok(DominanceReport { pass: max_product < 1.0, max_product, at })
}

/// Check a completed oracle trajectory against a valid certificate. A blow-up
/// under a valid certificate is a hard invariant violation (a bug), never a
/// data condition.
pub fn check_dominance(traj: &ScalarTrajectory, cert: &Certificate) -> Result<DominanceReport> {
    if !cert.valid() {
        return Err(Error::InvalidCertificate);
    }
    if let ScalarStatus::BlowUp { tau } = traj.status {
        return Err(Error::InvariantViolation(format!(
            "trajectory blew up at tau = {tau} under a valid certificate"
        )));
    }
    dominance_over_samples(&traj.times, &traj.values, cert)
}
