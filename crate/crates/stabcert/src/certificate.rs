//! Decay certificates: evaluate the sufficient conditions for envelope
//! dominance, search the feasible region in `b1`, and grid-verify the general
//! weighted inequality for user-supplied data.
//!
//! A certificate records the parameter tuple `(mu0, b0, b1, d, c0, p)`
//! together with a ledger of evaluated inequalities. When every ledger entry
//! passes, the solution norm of any system satisfying the hypotheses is
//! dominated by the envelope `1/μ(t)` with `μ(t) = μ(0) e^(½ ∫₀ᵗ γ)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::check_grid;
use crate::rates::{
    envelope_from_mu_log, mu_eval, mu_log, Coefficient, EnvelopeValue, GammaModel, MuValue,
    PerturbationBound, PowerLaw, TabulatedRate,
};

/// Identifiers for the individual inequalities a certificate can record.
#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConditionId {
    /// `mu0 * g(0) < 1`
    Mu0Strict,
    /// `2 d < p b1 b0^(1-d)` (power law, d < 1)
    Dlt1_35,
    /// `2 c0 mu0^(-p) <= b1 b0^(-d)` (power law, d < 1)
    Dlt1_36,
    /// `2 < b1 p` (power law, d = 1)
    Deq1_41,
    /// `2 c0 mu0^(-p) <= b1 / b0` (power law, d = 1)
    Deq1_42,
    /// grid-checked weighted inequality for a general admissible weight
    General_17,
    /// `mu(0) g(0) < 1` for the general branch
    General_18,
}

impl ConditionId {
    /// Human-readable inequality template for reports.
    pub fn formula(&self) -> &'static str {
        match self {
            ConditionId::Mu0Strict => "mu0 * g0 < 1",
            ConditionId::Dlt1_35 => "2*d < p * b1 * b0^(1-d)",
            ConditionId::Dlt1_36 => "2*c0*mu0^(-p) <= b1 * b0^(-d)",
            ConditionId::Deq1_41 => "2 < b1 * p",
            ConditionId::Deq1_42 => "2*c0*mu0^(-p) <= b1 / b0",
            ConditionId::General_17 => "a*mu^(-p) + beta*mu <= gamma - mu'/mu  (mu-scaled, on grid)",
            ConditionId::General_18 => "mu0 * g0 < 1",
        }
    }
}

/// One evaluated inequality: `lhs < rhs` when strict, `lhs <= rhs` otherwise,
/// at the reported worst point for grid-checked conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub id: ConditionId,
    pub lhs: f64,
    pub rhs: f64,
    pub strict: bool,
    pub pass: bool,
    /// Worst grid point, for conditions checked over a time grid.
    pub worst_t: Option<f64>,
}

impl ConditionReport {
    pub fn evaluate(id: ConditionId, lhs: f64, rhs: f64, strict: bool) -> Self {
        let pass = if strict { lhs < rhs } else { lhs <= rhs };
        Self { id, lhs, rhs, strict, pass, worst_t: None }
    }

    fn with_worst_t(mut self, t: f64) -> Self {
        self.worst_t = Some(t);
        self
    }

    /// Inequality text with the evaluated sides, e.g. for logs.
    pub fn describe(&self) -> String {
        let rel = if self.strict { "<" } else { "<=" };
        let verdict = if self.pass { "pass" } else { "fail" };
        format!("{}: {} {} {} ({})", self.id.formula(), self.lhs, rel, self.rhs, verdict)
    }
}

/// Which condition chain produced the certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateBranch {
    PowerLawDlt1,
    PowerLawDeq1,
    GeneralMu,
}

/// Whether the envelope decays to zero (the rate integral diverges) or only
/// stays bounded away from zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    AsymptoticStability,
    StabilityOnly,
}

/// A parameter tuple plus its verified inequality ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    mu0: f64,
    gamma: GammaModel,
    bound: PerturbationBound,
    branch: CertificateBranch,
    checks: Vec<ConditionReport>,
    valid: bool,
    regime: Regime,
}

impl Certificate {
    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn gamma(&self) -> &GammaModel {
        &self.gamma
    }

    pub fn bound(&self) -> &PerturbationBound {
        &self.bound
    }

    pub fn branch(&self) -> CertificateBranch {
        self.branch
    }

    pub fn checks(&self) -> &[ConditionReport] {
        &self.checks
    }

    pub fn valid(&self) -> bool {
        self.valid
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// `ln μ(t)` for this certificate's weight.
    pub fn mu_log(&self, t: f64) -> Result<f64> {
        mu_log(self.mu0, &self.gamma, t)
    }

    /// `μ(t)` with saturation flagging.
    pub fn mu(&self, t: f64) -> Result<MuValue> {
        mu_eval(self.mu0, &self.gamma, t)
    }

    /// Envelope value `1/μ(t)`. Refuses to evaluate an invalid certificate.
    pub fn envelope(&self, t: f64) -> Result<EnvelopeValue> {
        Ok(self.envelope_fn()?.eval(t)?)
    }

    /// The envelope as a named evaluator.
    pub fn envelope_fn(&self) -> Result<Envelope<'_>> {
        if !self.valid {
            return Err(Error::InvalidCertificate);
        }
        Ok(Envelope { cert: self })
    }
}

/// Non-increasing majorant `1/μ(t)` of the solution norm; only obtainable
/// from a valid certificate.
#[derive(Debug, Clone, Copy)]
pub struct Envelope<'a> {
    cert: &'a Certificate,
}

impl Envelope<'_> {
    pub fn eval(&self, t: f64) -> Result<EnvelopeValue> {
        Ok(envelope_from_mu_log(self.cert.mu_log(t)?))
    }

    pub fn certificate(&self) -> &Certificate {
        self.cert
    }
}

fn validate_g0(g0: f64) -> Result<()> {
    if !g0.is_finite() || g0 < 0.0 {
        return Err(Error::InvalidParameter(format!("g0 must be finite and >= 0, got {g0}")));
    }
    Ok(())
}

fn validate_mu0(mu0: f64) -> Result<()> {
    if !mu0.is_finite() || mu0 <= 0.0 {
        return Err(Error::InvalidParameter(format!("mu0 must be finite and > 0, got {mu0}")));
    }
    Ok(())
}

/// Default weight start: just inside the strict bound `mu0 g0 < 1`, which
/// maximizes the envelope start while keeping the margin explicit.
pub fn default_mu0(g0: f64) -> f64 {
    if g0 == 0.0 {
        1.0
    } else {
        (1.0 - MU0_MARGIN) / g0
    }
}

const MU0_MARGIN: f64 = 0.01;

/// The closed-form branch conditions for a power-law rate.
///
/// The strict growth conditions (`Dlt1_35` / `Deq1_41`) exist only to push the
/// initial-time comparison forward in time; with `c0 = 0` the weighted
/// inequality holds outright, so `certify` drops them while the feasibility
/// search keeps the full chain.
fn power_law_branch_checks(
    pl: &PowerLaw,
    bound: &PerturbationBound,
    mu0: f64,
    keep_growth_for_linear: bool,
) -> Vec<ConditionReport> {
    let (b0, b1, d) = (pl.b0(), pl.b1(), pl.d());
    let (c0, p) = (bound.c0(), bound.p());
    let smallness = 2.0 * c0 * mu0.powf(-p);
    let mut checks = Vec::new();
    let include_growth = c0 > 0.0 || keep_growth_for_linear;
    if d == 1.0 {
        if include_growth {
            checks.push(ConditionReport::evaluate(ConditionId::Deq1_41, 2.0, b1 * p, true));
        }
        checks.push(ConditionReport::evaluate(ConditionId::Deq1_42, smallness, b1 / b0, false));
    } else {
        if include_growth {
            checks.push(ConditionReport::evaluate(
                ConditionId::Dlt1_35,
                2.0 * d,
                p * b1 * b0.powf(1.0 - d),
                true,
            ));
        }
        checks.push(ConditionReport::evaluate(
            ConditionId::Dlt1_36,
            smallness,
            b1 * b0.powf(-d),
            false,
        ));
    }
    checks
}

/// Evaluate the sufficient conditions for a power-law rate and assemble the
/// certificate. `mu0` defaults to `0.99 / g0` (`1` when `g0 = 0`).
///
/// For `d > 1` the closed-form chain does not apply: the weighted inequality
/// is then decided analytically in the tail, which fails whenever `c0 > 0`,
/// and the regime is reported as stability-only either way.
pub fn certify(
    gamma: &GammaModel,
    bound: PerturbationBound,
    g0: f64,
    mu0: Option<f64>,
) -> Result<Certificate> {
    let pl = *gamma
        .as_power_law()
        .ok_or(Error::Unsupported("certify needs a power-law rate; see verify_general_mu"))?;
    validate_g0(g0)?;
    let mu0 = match mu0 {
        Some(m) => {
            validate_mu0(m)?;
            m
        }
        None => default_mu0(g0),
    };

    let mut checks =
        vec![ConditionReport::evaluate(ConditionId::Mu0Strict, mu0 * g0, 1.0, true)];
    let (branch, regime) = if pl.d() > 1.0 {
        (CertificateBranch::PowerLawDlt1, Regime::StabilityOnly)
    } else if pl.d() == 1.0 {
        (CertificateBranch::PowerLawDeq1, Regime::AsymptoticStability)
    } else {
        (CertificateBranch::PowerLawDlt1, Regime::AsymptoticStability)
    };

    if pl.d() > 1.0 {
        // Tail limit of the mu-scaled inequality: c0 mu0^(-p) e^(-p/2 ∫γ) vs γ/2 -> 0.
        let total = pl.total_integral().expect("d > 1 has a finite rate integral");
        let tail_lhs = bound.c0() * mu0.powf(-bound.p()) * (-0.5 * bound.p() * total).exp();
        checks.push(ConditionReport::evaluate(ConditionId::General_17, tail_lhs, 0.0, false));
    } else {
        checks.extend(power_law_branch_checks(&pl, &bound, mu0, false));
    }

    let valid = checks.iter().all(|c| c.pass);
    Ok(Certificate { mu0, gamma: gamma.clone(), bound, branch, checks, valid, regime })
}

/// Minimal `b1` for which the closed-form branch conditions pass, found by
/// doubling to bracket and bisecting to absolute tolerance `1e-9`, plus an
/// ulp-scale margin so the returned value itself certifies. Feasibility is
/// upward-closed in `b1`, so the bracket always exists.
pub fn search_b1(b0: f64, d: f64, bound: &PerturbationBound, mu0: f64) -> Result<f64> {
    if !(b0 > 0.0 && b0.is_finite()) {
        return Err(Error::InvalidParameter(format!("b0 must be > 0, got {b0}")));
    }
    if !(d > 0.0 && d <= 1.0) {
        return Err(Error::InvalidParameter(format!("search_b1 needs d in (0, 1], got {d}")));
    }
    validate_mu0(mu0)?;

    let passes = |b1: f64| -> bool {
        let pl = PowerLaw::new(b0, b1, d).expect("positive parameters");
        power_law_branch_checks(&pl, bound, mu0, true).iter().all(|c| c.pass)
    };

    let mut lo = 0.0;
    let mut hi = 1.0;
    while !passes(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e290 {
            return Err(Error::Infeasible(format!(
                "no feasible b1 below 1e290 for b0={b0}, d={d}"
            )));
        }
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if passes(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let b1 = hi + (1e-12 * hi).max(1e-9);
    debug_assert!(passes(b1));
    Ok(b1)
}

/// Admissible weight for the general check: positive, nondecreasing, C¹.
#[derive(Clone)]
pub enum MuFunction {
    /// `μ(t) = μ(0) e^(½ ∫₀ᵗ γ)`, the canonical choice tied to the rate.
    Canonical { mu0: f64 },
    /// Arbitrary handle with its derivative.
    Custom {
        mu: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        mu_dot: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
    /// Tabulated weight with tabulated derivative (linear interpolation).
    Tabulated { mu: TabulatedRate, mu_dot: TabulatedRate },
}

impl std::fmt::Debug for MuFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MuFunction::Canonical { mu0 } => write!(f, "Canonical {{ mu0: {mu0} }}"),
            MuFunction::Custom { .. } => write!(f, "Custom {{ .. }}"),
            MuFunction::Tabulated { .. } => write!(f, "Tabulated {{ .. }}"),
        }
    }
}

/// Inputs for the grid-verified general inequality.
#[derive(Debug, Clone)]
pub struct GeneralMuSpec {
    pub mu: MuFunction,
    pub a: Coefficient,
    pub beta: Coefficient,
    pub gamma: GammaModel,
    pub p: f64,
    pub horizon: f64,
    pub grid_points: usize,
}

impl GeneralMuSpec {
    pub fn new(
        mu: MuFunction,
        a: Coefficient,
        beta: Coefficient,
        gamma: GammaModel,
        p: f64,
        horizon: f64,
        grid_points: usize,
    ) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("p must be > 0, got {p}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon must be > 0, got {horizon}")));
        }
        if grid_points < 16 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 16 points, got {grid_points}"
            )));
        }
        if let MuFunction::Canonical { mu0 } = mu {
            validate_mu0(mu0)?;
        }
        Ok(Self { mu, a, beta, gamma, p, horizon, grid_points })
    }

    /// Canonical weight over the default horizon (`10⁴ b0` for a power law,
    /// the grid span for tabulated rates) with the default grid density.
    pub fn canonical(
        mu0: f64,
        gamma: GammaModel,
        a: Coefficient,
        beta: Coefficient,
        p: f64,
    ) -> Result<Self> {
        let horizon = Self::default_horizon(&gamma);
        Self::new(MuFunction::Canonical { mu0 }, a, beta, gamma, p, horizon, 100_000)
    }

    pub fn default_horizon(gamma: &GammaModel) -> f64 {
        match gamma {
            GammaModel::PowerLaw(pl) => 1e4 * pl.b0(),
            GammaModel::Tabulated(tab) => *tab.grid().last().unwrap(),
        }
    }
}

/// Initial-rate growth condition for the canonical weight: whether
/// `γ(0) <= γ(t) e^(p/2 ∫₀ᵗ γ)` holds on the grid and keeps growing at the
/// horizon. When it does, the grid verdict extends to all later times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthCheck {
    pub holds_on_grid: bool,
    pub margin_increasing_at_tail: bool,
}

/// Outcome of the grid check. The margin is measured after multiplying the
/// inequality through by `μ(t) > 0`, which keeps late times well-scaled.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralMuReport {
    pub pass: bool,
    pub worst_t: f64,
    pub margin: f64,
    pub horizon: f64,
    /// Present only for the canonical weight.
    pub growth: Option<GrowthCheck>,
    /// Grid verdict plus growth condition: the pass extends beyond the horizon.
    pub tail_certified: bool,
    /// Largest `a(t)` seen on the grid (records the bound actually used).
    pub sup_a: f64,
}

struct MuSample {
    mu: f64,
    /// `μ̇/μ`
    log_derivative: f64,
    /// `μ^(-p)`
    inv_pow_p: f64,
}

fn sample_mu(mu: &MuFunction, gamma: &GammaModel, p: f64, t: f64) -> Result<MuSample> {
    match mu {
        MuFunction::Canonical { mu0 } => {
            let log = mu_log(*mu0, gamma, t)?;
            Ok(MuSample {
                mu: log.exp(),
                log_derivative: 0.5 * gamma.eval(t)?,
                inv_pow_p: (-p * log).exp(),
            })
        }
        MuFunction::Custom { mu, mu_dot } => {
            let m = mu(t);
            let md = mu_dot(t);
            if !(m > 0.0) || !m.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "mu must be positive and finite on the grid, got {m} at t = {t}"
                )));
            }
            if !(md >= 0.0) || !md.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "mu' must be >= 0 on the grid, got {md} at t = {t}"
                )));
            }
            Ok(MuSample { mu: m, log_derivative: md / m, inv_pow_p: m.powf(-p) })
        }
        MuFunction::Tabulated { mu, mu_dot } => {
            let m = mu.eval(t)?;
            let md = mu_dot.eval(t)?;
            if !(m > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "tabulated mu must be positive, got {m} at t = {t}"
                )));
            }
            Ok(MuSample { mu: m, log_derivative: md / m, inv_pow_p: m.powf(-p) })
        }
    }
}

/// Check the weighted inequality `a μ^(-1-p) + β <= μ^(-1)(γ - μ̇/μ)` on a
/// log-spaced grid over `[0, horizon]`, after scaling both sides by `μ`.
/// Returns the worst point, the margin there, and — for the canonical weight —
/// the growth condition that lets the verdict extend past the horizon.
pub fn verify_general_mu(spec: &GeneralMuSpec) -> Result<GeneralMuReport> {
    let grid = check_grid(spec.horizon, spec.grid_points);
    let canonical = matches!(spec.mu, MuFunction::Canonical { .. });

    let gamma0 = spec.gamma.eval(0.0)?;
    let mut margin = f64::INFINITY;
    let mut worst_t = 0.0;
    let mut sup_a = 0.0f64;
    let mut growth_holds = true;
    let mut growth_margins: Vec<f64> = Vec::new();

    for &t in &grid {
        let gamma_t = spec.gamma.eval(t)?;
        let a_t = spec.a.eval(t)?;
        let beta_t = spec.beta.eval(t)?;
        sup_a = sup_a.max(a_t);
        let m = sample_mu(&spec.mu, &spec.gamma, spec.p, t)?;

        // mu-scaled sides of the inequality.
        let lhs = a_t * m.inv_pow_p + if beta_t == 0.0 { 0.0 } else { beta_t * m.mu };
        let rhs = gamma_t - m.log_derivative;
        let diff = rhs - lhs;
        if diff < margin {
            margin = diff;
            worst_t = t;
        }

        if canonical {
            let g_margin = if gamma0 == 0.0 {
                f64::INFINITY
            } else if gamma_t == 0.0 {
                f64::NEG_INFINITY
            } else {
                gamma_t.ln() + 0.5 * spec.p * spec.gamma.integral(t)? - gamma0.ln()
            };
            if g_margin < 0.0 {
                growth_holds = false;
            }
            growth_margins.push(g_margin);
        }
    }

    let growth = if canonical {
        let tail_start = grid.len() - (grid.len() / 10).max(2);
        let tail = &growth_margins[tail_start..];
        let increasing = tail.windows(2).all(|w| w[1] >= w[0]);
        Some(GrowthCheck { holds_on_grid: growth_holds, margin_increasing_at_tail: increasing })
    } else {
        None
    };

    let pass = margin >= 0.0;
    let tail_certified = pass
        && growth
            .map(|g| g.holds_on_grid && g.margin_increasing_at_tail)
            .unwrap_or(false);
    Ok(GeneralMuReport { pass, worst_t, margin, horizon: spec.horizon, growth, tail_certified, sup_a })
}

/// Certificate backed by the grid check instead of the closed-form chain.
/// Only the canonical weight can back a certificate document (the weight must
/// be reconstructible from the stored rate).
pub fn certify_general(spec: &GeneralMuSpec, g0: f64) -> Result<Certificate> {
    let MuFunction::Canonical { mu0 } = spec.mu else {
        return Err(Error::Unsupported(
            "only the canonical weight can back a certificate; use verify_general_mu for reports",
        ));
    };
    validate_g0(g0)?;
    let report = verify_general_mu(spec)?;

    // Reconstruct the worst-point sides for the ledger entry.
    let m = sample_mu(&spec.mu, &spec.gamma, spec.p, report.worst_t)?;
    let a_w = spec.a.eval(report.worst_t)?;
    let beta_w = spec.beta.eval(report.worst_t)?;
    let lhs = a_w * m.inv_pow_p + if beta_w == 0.0 { 0.0 } else { beta_w * m.mu };
    let rhs = spec.gamma.eval(report.worst_t)? - m.log_derivative;

    let checks = vec![
        ConditionReport::evaluate(ConditionId::General_18, mu0 * g0, 1.0, true),
        ConditionReport::evaluate(ConditionId::General_17, lhs, rhs, false)
            .with_worst_t(report.worst_t),
    ];
    let valid = checks.iter().all(|c| c.pass);
    let regime = match &spec.gamma {
        GammaModel::PowerLaw(pl) => {
            if pl.d() <= 1.0 {
                Regime::AsymptoticStability
            } else {
                Regime::StabilityOnly
            }
        }
        // Finite data cannot certify a divergent tail integral.
        GammaModel::Tabulated(_) => Regime::StabilityOnly,
    };
    let bound = PerturbationBound::new(report.sup_a, spec.p)?;
    Ok(Certificate {
        mu0,
        gamma: spec.gamma.clone(),
        bound,
        branch: CertificateBranch::GeneralMu,
        checks,
        valid,
        regime,
    })
}

/// Remark-1 dichotomy for power laws: the envelope decays to zero exactly when
/// the rate integral diverges (`d <= 1`). Tabulated rates are refused — a tail
/// integral cannot be decided from finite data.
pub fn classify_regime(gamma: &GammaModel) -> Result<Regime> {
    match gamma {
        GammaModel::PowerLaw(pl) => Ok(if pl.d() <= 1.0 {
            Regime::AsymptoticStability
        } else {
            Regime::StabilityOnly
        }),
        GammaModel::Tabulated(_) => {
            Err(Error::Unsupported("cannot classify a tabulated rate: the tail is unknown"))
        }
    }
}

// --- JSON document -----------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum GammaDoc {
    PowerLaw { b0: f64, b1: f64, d: f64 },
    Tabulated { grid: Vec<f64>, values: Vec<f64> },
}

#[derive(Serialize, Deserialize)]
struct BoundDoc {
    c0: f64,
    p: f64,
}

#[derive(Serialize, Deserialize)]
struct CheckDoc {
    id: ConditionId,
    lhs: f64,
    rhs: f64,
    strict: bool,
    pass: bool,
}

#[derive(Serialize, Deserialize)]
struct CertificateDoc {
    gamma: GammaDoc,
    bound: BoundDoc,
    mu0: f64,
    branch: CertificateBranch,
    checks: Vec<CheckDoc>,
    valid: bool,
    regime: Regime,
}

impl Certificate {
    pub fn to_json_string(&self) -> String {
        let gamma = match &self.gamma {
            GammaModel::PowerLaw(pl) => {
                GammaDoc::PowerLaw { b0: pl.b0(), b1: pl.b1(), d: pl.d() }
            }
            GammaModel::Tabulated(tab) => GammaDoc::Tabulated {
                grid: tab.grid().to_vec(),
                values: tab.values().to_vec(),
            },
        };
        let doc = CertificateDoc {
            gamma,
            bound: BoundDoc { c0: self.bound.c0(), p: self.bound.p() },
            mu0: self.mu0,
            branch: self.branch,
            checks: self
                .checks
                .iter()
                .map(|c| CheckDoc { id: c.id, lhs: c.lhs, rhs: c.rhs, strict: c.strict, pass: c.pass })
                .collect(),
            valid: self.valid,
            regime: self.regime,
        };
        serde_json::to_string_pretty(&doc).expect("certificate serialization cannot fail")
    }

    /// Parse and validate a certificate document. The ledger is checked for
    /// internal consistency (pass flags match the recorded sides, validity
    /// matches the ledger) so a tampered document is rejected, not trusted.
    pub fn from_json_str(json: &str) -> Result<Self> {
        let doc: CertificateDoc = serde_json::from_str(json)
            .map_err(|e| Error::InvalidParameter(format!("certificate JSON: {e}")))?;
        let gamma = match doc.gamma {
            GammaDoc::PowerLaw { b0, b1, d } => GammaModel::power_law(b0, b1, d)?,
            GammaDoc::Tabulated { grid, values } => GammaModel::tabulated(grid, values)?,
        };
        let bound = PerturbationBound::new(doc.bound.c0, doc.bound.p)?;
        validate_mu0(doc.mu0)?;
        let mut checks = Vec::with_capacity(doc.checks.len());
        for c in &doc.checks {
            if !c.lhs.is_finite() || !c.rhs.is_finite() {
                return Err(Error::InvalidParameter("non-finite check entry".into()));
            }
            let rebuilt = ConditionReport::evaluate(c.id, c.lhs, c.rhs, c.strict);
            if rebuilt.pass != c.pass {
                return Err(Error::InvalidParameter(format!(
                    "check {:?} claims pass={} but the recorded sides say {}",
                    c.id, c.pass, rebuilt.pass
                )));
            }
            checks.push(rebuilt);
        }
        let valid = checks.iter().all(|c| c.pass);
        if valid != doc.valid {
            return Err(Error::InvalidParameter(format!(
                "document claims valid={} but the ledger says {valid}",
                doc.valid
            )));
        }
        Ok(Certificate {
            mu0: doc.mu0,
            gamma,
            bound,
            branch: doc.branch,
            checks,
            valid,
            regime: doc.regime,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn power_law(b0: f64, b1: f64, d: f64) -> GammaModel {
        GammaModel::power_law(b0, b1, d).unwrap()
    }

    #[test]
    fn certify_example_d_half_passes_with_recorded_sides() {
        let cert = certify(
            &power_law(1.0, 2.0, 0.5),
            PerturbationBound::new(1.0, 1.0).unwrap(),
            0.5,
            Some(1.0),
        )
        .unwrap();
        assert!(cert.valid());
        assert_eq!(cert.branch(), CertificateBranch::PowerLawDlt1);
        assert_eq!(cert.regime(), Regime::AsymptoticStability);
        let ids: Vec<_> = cert.checks().iter().map(|c| c.id).collect();
        assert_eq!(ids, vec![ConditionId::Mu0Strict, ConditionId::Dlt1_35, ConditionId::Dlt1_36]);
        // mu0 g0 = 0.5 < 1; 2d = 1 < p b1 b0^(1-d) = 2; 2 c0 mu0^-p = 2 <= b1 b0^-d = 2
        assert_eq!(cert.checks()[0].lhs, 0.5);
        assert_eq!(cert.checks()[1].lhs, 1.0);
        assert_eq!(cert.checks()[1].rhs, 2.0);
        assert_eq!(cert.checks()[2].lhs, 2.0);
        assert_eq!(cert.checks()[2].rhs, 2.0);
        assert!(cert.checks()[2].pass, "non-strict boundary passes");
    }

    #[test]
    fn certify_example_d_one_fails_strict_growth() {
        let cert = certify(
            &power_law(1.0, 2.0, 1.0),
            PerturbationBound::new(1.0, 1.0).unwrap(),
            0.5,
            Some(1.0),
        )
        .unwrap();
        assert!(!cert.valid());
        let c41 = cert.checks().iter().find(|c| c.id == ConditionId::Deq1_41).unwrap();
        assert!(!c41.pass, "b1 p = 2 is not > 2");
        assert_eq!(c41.lhs, 2.0);
        assert_eq!(c41.rhs, 2.0);
    }

    #[test]
    fn certify_linear_case_is_trivially_valid() {
        // c0 = 0: the weighted inequality holds outright for any power law
        // with d <= 1 once mu0 g0 < 1.
        for d in [0.3, 0.9, 1.0] {
            let cert = certify(
                &power_law(2.0, 0.1, d),
                PerturbationBound::new(0.0, 1.0).unwrap(),
                0.5,
                Some(1.0),
            )
            .unwrap();
            assert!(cert.valid(), "linear system must certify at d = {d}");
        }
    }

    #[test]
    fn certify_rejects_mu0_at_or_above_inverse_g0() {
        let cert = certify(
            &power_law(1.0, 2.0, 0.5),
            PerturbationBound::new(1.0, 1.0).unwrap(),
            0.5,
            Some(2.0),
        )
        .unwrap();
        assert!(!cert.valid());
        assert!(!cert.checks()[0].pass, "mu0 g0 = 1 must fail the strict check");
        assert!(cert.envelope(1.0).is_err(), "invalid certificate refuses envelope queries");
    }

    #[test]
    fn certify_default_mu0() {
        let cert = certify(
            &power_law(1.0, 3.0, 0.5),
            PerturbationBound::new(0.5, 1.0).unwrap(),
            0.5,
            None,
        )
        .unwrap();
        assert_relative_eq!(cert.mu0(), 0.99 / 0.5, max_relative = 1e-15);
        let cert = certify(
            &power_law(1.0, 3.0, 0.5),
            PerturbationBound::new(0.0, 1.0).unwrap(),
            0.0,
            None,
        )
        .unwrap();
        assert_eq!(cert.mu0(), 1.0);
        assert!(cert.valid(), "zero initial data certifies trivially");
    }

    #[test]
    fn certify_d_above_one_is_stability_only() {
        let cert = certify(
            &power_law(1.0, 5.0, 2.0),
            PerturbationBound::new(1.0, 1.0).unwrap(),
            0.5,
            Some(1.0),
        )
        .unwrap();
        assert_eq!(cert.regime(), Regime::StabilityOnly);
        assert!(!cert.valid(), "superlinear term breaks the tail inequality for d > 1");
        // The linear case keeps the dominance guarantee (boundedness only).
        let cert = certify(
            &power_law(1.0, 5.0, 2.0),
            PerturbationBound::new(0.0, 1.0).unwrap(),
            0.5,
            Some(1.0),
        )
        .unwrap();
        assert_eq!(cert.regime(), Regime::StabilityOnly);
        assert!(cert.valid());
    }

    #[test]
    fn envelope_examples() {
        let cert = certify(
            &power_law(1.0, 4.0, 0.5),
            PerturbationBound::new(0.0, 1.0).unwrap(),
            0.5,
            Some(1.0),
        )
        .unwrap();
        // exponent -(4/1)(sqrt(4) - sqrt(1)) = -4
        assert_relative_eq!(
            cert.envelope(3.0).unwrap().value,
            0.018315638888734179,
            max_relative = 1e-12
        );
        assert_eq!(cert.envelope(0.0).unwrap().value, 1.0);

        let cert = certify(
            &power_law(1.0, 4.0, 1.0),
            PerturbationBound::new(0.0, 1.0).unwrap(),
            0.5,
            Some(1.0),
        )
        .unwrap();
        assert_relative_eq!(cert.envelope(3.0).unwrap().value, 0.0625, max_relative = 1e-12);
    }

    #[test]
    fn search_b1_examples() {
        // Binding non-strict smallness condition: b1 = 2 exactly.
        let b1 = search_b1(1.0, 0.5, &PerturbationBound::new(1.0, 1.0).unwrap(), 1.0).unwrap();
        assert!((b1 - 2.0).abs() <= 1e-8, "got {b1}");
        // d = 1: strict growth condition binds, so the result sits just above 2.
        let b1 = search_b1(1.0, 1.0, &PerturbationBound::new(1.0, 1.0).unwrap(), 1.0).unwrap();
        assert!(b1 > 2.0 && b1 - 2.0 <= 1e-6, "got {b1}");
        // Linear case: only the strict growth condition is active.
        let b1 = search_b1(1.0, 0.5, &PerturbationBound::new(0.0, 1.0).unwrap(), 1.0).unwrap();
        assert!(b1 > 1.0 && b1 - 1.0 <= 1e-6, "got {b1}");
    }

    #[test]
    fn search_b1_result_certifies() {
        let bound = PerturbationBound::new(2.5, 0.7).unwrap();
        for d in [0.25, 0.5, 0.99, 1.0] {
            let b1 = search_b1(3.0, d, &bound, 1.2).unwrap();
            let cert =
                certify(&power_law(3.0, b1, d), bound, 0.5, Some(1.2)).unwrap();
            assert!(cert.valid(), "search result must certify at d = {d}");
        }
    }

    #[test]
    fn verify_general_mu_canonical_matches_closed_form_example() {
        let spec = GeneralMuSpec::new(
            MuFunction::Canonical { mu0: 1.0 },
            Coefficient::constant(1.0).unwrap(),
            Coefficient::Zero,
            power_law(1.0, 2.0, 0.5),
            1.0,
            100.0,
            4_096,
        )
        .unwrap();
        let report = verify_general_mu(&spec).unwrap();
        assert!(report.pass);
        assert!(report.margin >= 0.0);
        let growth = report.growth.unwrap();
        assert!(growth.holds_on_grid);
        assert!(report.tail_certified);
    }

    #[test]
    fn verify_general_mu_zero_terms_pass() {
        let spec = GeneralMuSpec::new(
            MuFunction::Canonical { mu0: 2.0 },
            Coefficient::Zero,
            Coefficient::Zero,
            power_law(0.5, 3.0, 1.0),
            2.0,
            1e3,
            1_024,
        )
        .unwrap();
        let report = verify_general_mu(&spec).unwrap();
        assert!(report.pass);
    }

    #[test]
    fn verify_general_mu_rejects_fast_growing_weight() {
        // mu = e^(2t) outgrows gamma = 1/(1+t): the scaled right side is negative.
        let spec = GeneralMuSpec::new(
            MuFunction::Custom {
                mu: Arc::new(|t: f64| (2.0 * t).exp()),
                mu_dot: Arc::new(|t: f64| 2.0 * (2.0 * t).exp()),
            },
            Coefficient::Zero,
            Coefficient::Zero,
            power_law(1.0, 1.0, 1.0),
            1.0,
            50.0,
            512,
        )
        .unwrap();
        let report = verify_general_mu(&spec).unwrap();
        assert!(!report.pass);
        assert!(report.margin < 0.0);
    }

    #[test]
    fn verify_general_mu_flags_decreasing_weight() {
        let spec = GeneralMuSpec::new(
            MuFunction::Custom {
                mu: Arc::new(|t: f64| (-t).exp()),
                mu_dot: Arc::new(|t: f64| -(-t).exp()),
            },
            Coefficient::Zero,
            Coefficient::Zero,
            power_law(1.0, 1.0, 1.0),
            1.0,
            10.0,
            64,
        )
        .unwrap();
        assert!(matches!(verify_general_mu(&spec), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn certify_general_canonical_builds_a_valid_certificate() {
        let spec = GeneralMuSpec::new(
            MuFunction::Canonical { mu0: 1.0 },
            Coefficient::constant(1.0).unwrap(),
            Coefficient::Zero,
            power_law(1.0, 2.0, 0.5),
            1.0,
            1e3,
            2_048,
        )
        .unwrap();
        let cert = certify_general(&spec, 0.5).unwrap();
        assert!(cert.valid());
        assert_eq!(cert.branch(), CertificateBranch::GeneralMu);
        let ids: Vec<_> = cert.checks().iter().map(|c| c.id).collect();
        assert_eq!(ids, vec![ConditionId::General_18, ConditionId::General_17]);
        assert!(cert.checks()[1].worst_t.is_some());
    }

    #[test]
    fn classify_regime_examples() {
        assert_eq!(classify_regime(&power_law(1.0, 1.0, 1.0)).unwrap(), Regime::AsymptoticStability);
        assert_eq!(classify_regime(&power_law(1.0, 1.0, 0.5)).unwrap(), Regime::AsymptoticStability);
        assert_eq!(classify_regime(&power_law(1.0, 1.0, 2.0)).unwrap(), Regime::StabilityOnly);
        let tab = GammaModel::tabulated(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert!(matches!(classify_regime(&tab), Err(Error::Unsupported(_))));
    }

    #[test]
    fn strictness_at_boundaries() {
        // (41) at equality must fail (strict).
        let cert = certify(
            &power_law(1.0, 2.0, 1.0),
            PerturbationBound::new(0.5, 1.0).unwrap(),
            0.1,
            Some(1.0),
        )
        .unwrap();
        assert!(!cert.checks().iter().find(|c| c.id == ConditionId::Deq1_41).unwrap().pass);
        // (35) at equality must fail (strict): 2d = 1, p b1 b0^(1-d) = 1.
        let cert = certify(
            &power_law(1.0, 1.0, 0.5),
            PerturbationBound::new(0.1, 1.0).unwrap(),
            0.1,
            Some(1.0),
        )
        .unwrap();
        assert!(!cert.checks().iter().find(|c| c.id == ConditionId::Dlt1_35).unwrap().pass);
        // Mu0 check at equality must fail.
        let cert = certify(
            &power_law(1.0, 4.0, 0.5),
            PerturbationBound::new(0.0, 1.0).unwrap(),
            0.5,
            Some(2.0),
        )
        .unwrap();
        assert!(!cert.checks()[0].pass);
    }

    #[test]
    fn json_round_trip_preserves_the_ledger() {
        let cert = certify(
            &power_law(1.0, 2.0, 0.5),
            PerturbationBound::new(1.0, 1.0).unwrap(),
            0.5,
            Some(1.0),
        )
        .unwrap();
        let json = cert.to_json_string();
        let back = Certificate::from_json_str(&json).unwrap();
        assert_eq!(back, cert);

        // Field names are part of the interface.
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in ["gamma", "bound", "mu0", "branch", "checks", "valid", "regime"] {
            assert!(v.get(key).is_some(), "missing key {key}");
        }
        assert_eq!(v["gamma"]["b0"], 1.0);
        let check = &v["checks"][0];
        for key in ["id", "lhs", "rhs", "strict", "pass"] {
            assert!(check.get(key).is_some(), "missing check key {key}");
        }
    }

    #[test]
    fn json_rejects_tampered_ledgers() {
        let cert = certify(
            &power_law(1.0, 2.0, 0.5),
            PerturbationBound::new(1.0, 1.0).unwrap(),
            0.5,
            Some(1.0),
        )
        .unwrap();
        let json = cert.to_json_string().replace("\"valid\": true", "\"valid\": false");
        assert!(Certificate::from_json_str(&json).is_err());
    }
}
