//! Finite-dimensional realizations of the evolution equation
//! `u' = A(t) u + F(t, u)`: matrix families whose symmetric part is exactly
//! `-γ(t) I` (the dissipativity hypothesis with equality, the worst case),
//! bounded nonlinearities, trajectory simulation and envelope validation.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::certificate::Certificate;
use crate::comparison::{dominance_over_samples, DominanceReport};
use crate::error::{Error, Result};
use crate::grid::report_times;
use crate::linalg::{seeded_unit_skew, seeded_orthogonal, symmetric_part_max_eigenvalue};
use crate::ode::{integrate, Diagnostics, SolverOptions, Termination};
use crate::rates::{GammaModel, PerturbationBound};

/// Guard against runaway growth in vector simulations.
pub const NORM_ESCAPE_THRESHOLD: f64 = 1e12;

/// The matrix family `A(t)`.
#[derive(Clone)]
pub enum SystemMatrix {
    /// `A(t) = -γ(t) I + ω K` with `K` skew-symmetric of unit spectral norm.
    /// The symmetric part is exactly `-γ(t) I`, so the quadratic form meets
    /// the dissipativity hypothesis with equality.
    DissipativePlusSkew { omega: f64, skew: DMatrix<f64> },
    /// Arbitrary matrix handle; the dissipativity hypothesis is sampled, not
    /// guaranteed.
    UserMatrix { a: Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync> },
}

impl std::fmt::Debug for SystemMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SystemMatrix::DissipativePlusSkew { omega, .. } => {
                write!(f, "DissipativePlusSkew {{ omega: {omega}, .. }}")
            }
            SystemMatrix::UserMatrix { .. } => write!(f, "UserMatrix {{ .. }}"),
        }
    }
}

/// Built-in nonlinearities saturating (or under-running) the growth bound.
#[derive(Clone)]
pub enum Nonlinearity {
    Zero,
    /// `F = c0 ||u||^p u`, saturating and radial: the norm dynamics decouple.
    Radial { c0: f64, p: f64 },
    /// `F = c0 ||u||^p Q u` with `Q` orthogonal: saturating but not radial.
    Rotated { c0: f64, p: f64, q: DMatrix<f64> },
    /// `F = c0 min(||u||, cap)^p u`: sub-saturating beyond the cap.
    Truncated { c0: f64, p: f64, cap: f64 },
    Custom { f: Arc<dyn Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync> },
}

impl std::fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Nonlinearity::Zero => write!(f, "Zero"),
            Nonlinearity::Radial { c0, p } => write!(f, "Radial {{ c0: {c0}, p: {p} }}"),
            Nonlinearity::Rotated { c0, p, .. } => write!(f, "Rotated {{ c0: {c0}, p: {p}, .. }}"),
            Nonlinearity::Truncated { c0, p, cap } => {
                write!(f, "Truncated {{ c0: {c0}, p: {p}, cap: {cap} }}")
            }
            Nonlinearity::Custom { .. } => write!(f, "Custom {{ .. }}"),
        }
    }
}

/// Constructor-side description of a built-in nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NonlinearitySpec {
    Zero,
    Radial { c0: f64, p: f64 },
    Rotated { c0: f64, p: f64, seed: u64 },
    Truncated { c0: f64, p: f64, cap: f64 },
}

/// A concrete system `u' = A(t) u + F(t, u)` with its verified growth bound.
#[derive(Debug, Clone)]
pub struct TimeVaryingSystem {
    dim: usize,
    gamma: GammaModel,
    matrix: SystemMatrix,
    nonlinearity: Nonlinearity,
    f_bound: PerturbationBound,
    hypothesis_verified: bool,
}

fn bound_for_spec(spec: &NonlinearitySpec) -> Result<PerturbationBound> {
    match *spec {
        NonlinearitySpec::Zero => PerturbationBound::new(0.0, 1.0),
        NonlinearitySpec::Radial { c0, p }
        | NonlinearitySpec::Rotated { c0, p, .. }
        | NonlinearitySpec::Truncated { c0, p, .. } => PerturbationBound::new(c0, p),
    }
}

impl TimeVaryingSystem {
    /// Build `A(t) = -γ(t) I + ω K` with a reproducible skew part.
    pub fn dissipative_plus_skew(
        dim: usize,
        gamma: GammaModel,
        omega: f64,
        skew_seed: u64,
        nl: NonlinearitySpec,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        if !omega.is_finite() {
            return Err(Error::InvalidParameter(format!("omega must be finite, got {omega}")));
        }
        let f_bound = bound_for_spec(&nl)?;
        if let NonlinearitySpec::Truncated { cap, .. } = nl {
            if !(cap > 0.0 && cap.is_finite()) {
                return Err(Error::InvalidParameter(format!("cap must be > 0, got {cap}")));
            }
        }
        let nonlinearity = match nl {
            NonlinearitySpec::Zero => Nonlinearity::Zero,
            NonlinearitySpec::Radial { c0, p } => Nonlinearity::Radial { c0, p },
            NonlinearitySpec::Rotated { c0, p, seed } => {
                Nonlinearity::Rotated { c0, p, q: seeded_orthogonal(dim, seed) }
            }
            NonlinearitySpec::Truncated { c0, p, cap } => Nonlinearity::Truncated { c0, p, cap },
        };
        let system = Self {
            dim,
            gamma,
            matrix: SystemMatrix::DissipativePlusSkew {
                omega,
                skew: seeded_unit_skew(dim, skew_seed),
            },
            nonlinearity,
            f_bound,
            hypothesis_verified: true,
        };
        system.check_f_bound(skew_seed ^ 0x5eed_f00d)?;
        Ok(system)
    }

    /// Wrap a user matrix handle. The abscissa hypothesis is sampled at 100
    /// times; failures flag the system instead of rejecting it.
    pub fn from_matrix(
        dim: usize,
        a: Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>,
        gamma: GammaModel,
        nonlinearity: Nonlinearity,
        f_bound: PerturbationBound,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        let mut system = Self {
            dim,
            gamma,
            matrix: SystemMatrix::UserMatrix { a },
            nonlinearity,
            f_bound,
            hypothesis_verified: true,
        };
        system.check_f_bound(0x5eed_f00d)?;
        // Sample the abscissa hypothesis over the first few decades.
        let horizon = match &system.gamma {
            GammaModel::PowerLaw(pl) => 1e3 * pl.b0(),
            GammaModel::Tabulated(tab) => *tab.grid().last().unwrap(),
        };
        let mut ok = true;
        for &t in &report_times(horizon, 100) {
            let m = system.matrix_at(t)?;
            let target = -system.gamma.eval(t)?;
            if symmetric_part_max_eigenvalue(&m) > target + 1e-10 * (1.0 + target.abs()) {
                ok = false;
                break;
            }
        }
        system.hypothesis_verified = ok;
        Ok(system)
    }

    /// Sample the growth bound at 10³ random points; reject violations beyond
    /// a 1e-10 relative tolerance.
    fn check_f_bound(&self, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (c0, p) = (self.f_bound.c0(), self.f_bound.p());
        let mut out = DVector::zeros(self.dim);
        for _ in 0..1000 {
            let t = 10f64.powf(rng.random_range(-3.0..3.0)) - 1e-3;
            let scale = 10f64.powf(rng.random_range(-3.0..1.0));
            let u = DVector::from_fn(self.dim, |_, _| rng.random_range(-1.0..1.0)) * scale;
            self.apply_nonlinearity(t, &u, &mut out);
            let lhs = out.norm();
            let rhs = c0 * u.norm().powf(1.0 + p);
            if lhs > rhs * (1.0 + 1e-10) + 1e-300 {
                return Err(Error::InvalidParameter(format!(
                    "nonlinearity violates its growth bound: ||F|| = {lhs} > {rhs} at t = {t}"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gamma(&self) -> &GammaModel {
        &self.gamma
    }

    pub fn f_bound(&self) -> &PerturbationBound {
        &self.f_bound
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    /// False when a user matrix failed the sampled abscissa check.
    pub fn hypothesis_verified(&self) -> bool {
        self.hypothesis_verified
    }

    /// Dense `A(t)`.
    pub fn matrix_at(&self, t: f64) -> Result<DMatrix<f64>> {
        match &self.matrix {
            SystemMatrix::DissipativePlusSkew { omega, skew } => {
                let gamma = self.gamma.eval(t)?;
                let mut m = skew * *omega;
                for i in 0..self.dim {
                    m[(i, i)] -= gamma;
                }
                Ok(m)
            }
            SystemMatrix::UserMatrix { a } => {
                let m = a(t);
                if m.nrows() != self.dim || m.ncols() != self.dim {
                    return Err(Error::InvalidParameter(format!(
                        "matrix handle returned {}x{}, expected {}x{}",
                        m.nrows(),
                        m.ncols(),
                        self.dim,
                        self.dim
                    )));
                }
                Ok(m)
            }
        }
    }

    /// `out = A(t) u` without materializing the matrix for built-in systems.
    fn apply_matrix(&self, t: f64, u: &DVector<f64>, out: &mut DVector<f64>) -> Result<()> {
        match &self.matrix {
            SystemMatrix::DissipativePlusSkew { omega, skew } => {
                let gamma = self.gamma.eval(t)?;
                if *omega == 0.0 {
                    out.copy_from(u);
                    *out *= -gamma;
                } else {
                    out.gemv(*omega, skew, u, 0.0);
                    out.axpy(-gamma, u, 1.0);
                }
                Ok(())
            }
            SystemMatrix::UserMatrix { .. } => {
                let m = self.matrix_at(t)?;
                out.gemv(1.0, &m, u, 0.0);
                Ok(())
            }
        }
    }

    /// `out = F(t, u)`.
    pub fn apply_nonlinearity(&self, t: f64, u: &DVector<f64>, out: &mut DVector<f64>) {
        match &self.nonlinearity {
            Nonlinearity::Zero => out.fill(0.0),
            Nonlinearity::Radial { c0, p } => {
                out.copy_from(u);
                *out *= c0 * u.norm().powf(*p);
            }
            Nonlinearity::Rotated { c0, p, q } => {
                out.gemv(c0 * u.norm().powf(*p), q, u, 0.0);
            }
            Nonlinearity::Truncated { c0, p, cap } => {
                out.copy_from(u);
                *out *= c0 * u.norm().min(*cap).powf(*p);
            }
            Nonlinearity::Custom { f } => out.copy_from(&f(t, u)),
        }
    }
}

/// Numerical abscissa of `A(t)`: the largest eigenvalue of the symmetric part,
/// i.e. the sharpest `ω(t)` with `(A(t)u, u) <= ω(t) ||u||²`.
pub fn numerical_abscissa(system: &TimeVaryingSystem, t: f64) -> Result<f64> {
    Ok(symmetric_part_max_eigenvalue(&system.matrix_at(t)?))
}

/// Simulated trajectory: time grid, states, Euclidean norms and integrator
/// diagnostics. `truncated_at` records a premature stop (step underflow or
/// norm escape).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub norms: Vec<f64>,
    pub diagnostics: Diagnostics,
    pub truncated_at: Option<f64>,
}

impl Trajectory {
    pub fn complete(&self) -> bool {
        self.truncated_at.is_none()
    }

    pub(crate) fn from_ode(sol: crate::ode::OdeSolution) -> Self {
        let truncated_at = match sol.termination {
            Termination::Reached => None,
            Termination::Threshold { t }
            | Termination::StepUnderflow { t }
            | Termination::StepLimit { t } => Some(t),
        };
        let diagnostics = sol.diagnostics;
        let (times, raw_states) = sol.merged_series();
        let states: Vec<DVector<f64>> =
            raw_states.into_iter().map(DVector::from_vec).collect();
        let norms = states.iter().map(|s| s.norm()).collect();
        Trajectory { times, states, norms, diagnostics, truncated_at }
    }
}

/// Integrate the system from `u0` to `t_end`, sampling at least 200 log-spaced
/// report times in addition to the accepted steps.
pub fn simulate(
    system: &TimeVaryingSystem,
    u0: &DVector<f64>,
    t_end: f64,
    rel_tol: f64,
) -> Result<Trajectory> {
    let report = report_times(t_end, 256);
    simulate_sampled(system, u0, t_end, rel_tol, &report)
}

/// As [`simulate`] with caller-provided report times (shared-grid comparisons).
pub fn simulate_sampled(
    system: &TimeVaryingSystem,
    u0: &DVector<f64>,
    t_end: f64,
    rel_tol: f64,
    report: &[f64],
) -> Result<Trajectory> {
    if u0.len() != system.dim() {
        return Err(Error::InvalidParameter(format!(
            "initial state has dimension {}, system has {}",
            u0.len(),
            system.dim()
        )));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_end must be > 0, got {t_end}")));
    }
    let opts = SolverOptions {
        rel_tol,
        threshold: Some(NORM_ESCAPE_THRESHOLD),
        ..Default::default()
    };
    let n = system.dim();
    let mut u = DVector::zeros(n);
    let mut au = DVector::zeros(n);
    let mut fu = DVector::zeros(n);
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        u.copy_from_slice(y);
        system.apply_matrix(t, &u, &mut au)?;
        system.apply_nonlinearity(t, &u, &mut fu);
        for i in 0..n {
            dy[i] = au[i] + fu[i];
        }
        Ok(())
    };
    let sol = integrate(rhs, 0.0, t_end, u0.as_slice(), report, &opts)?;
    Ok(Trajectory::from_ode(sol))
}

/// Envelope dominance over the vector norms: `||u(t)|| μ(t) < 1` everywhere.
pub fn verify_trajectory_envelope(
    traj: &Trajectory,
    cert: &Certificate,
) -> Result<DominanceReport> {
    if !cert.valid() {
        return Err(Error::InvalidCertificate);
    }
    if !traj.complete() {
        return Err(Error::TrajectoryIncomplete);
    }
    dominance_over_samples(&traj.times, &traj.norms, cert)
}
