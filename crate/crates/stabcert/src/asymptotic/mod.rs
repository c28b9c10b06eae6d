//! Constant-coefficient systems under integrable perturbations: uniform
//! bounds on `||v(t)||` via the integrated perturbation norm, and asymptotic
//! matching of perturbed and unperturbed solutions through the tail integral
//! equation.

mod expm;
mod levinson;

pub use expm::{expm, matrix_exponential};
pub use levinson::{levinson_match, matching_error_report, MatchedPair, MatchingReport, MatchingRow};

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::grid::log_spaced;
use crate::linalg::{spectral_norm, symmetric_part_max_eigenvalue};
use crate::ode::{integrate, SolverOptions};

/// Perturbation family `B(t)` with closed-form norm and tail integral where
/// available. The built-in families are a fixed matrix times a scalar decay
/// profile, so `||B(t)||` is exact, not sampled.
#[derive(Clone)]
pub enum PerturbationFamily {
    /// `B(t) = e^(-rate t) C`
    ExpDecay { rate: f64, coeff: DMatrix<f64>, coeff_norm: f64 },
    /// `B(t) = (1+t)^(-exponent) C` with `exponent > 1`
    PowerDecay { exponent: f64, coeff: DMatrix<f64>, coeff_norm: f64 },
    /// Arbitrary handle; the norm integral must be supplied and there is no
    /// tail control (rejected by the matching construction).
    Custom {
        b: Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>,
        dim: usize,
        norm_integral: f64,
    },
}

impl std::fmt::Debug for PerturbationFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PerturbationFamily::ExpDecay { rate, coeff_norm, .. } => {
                write!(f, "ExpDecay {{ rate: {rate}, coeff_norm: {coeff_norm} }}")
            }
            PerturbationFamily::PowerDecay { exponent, coeff_norm, .. } => {
                write!(f, "PowerDecay {{ exponent: {exponent}, coeff_norm: {coeff_norm} }}")
            }
            PerturbationFamily::Custom { norm_integral, .. } => {
                write!(f, "Custom {{ norm_integral: {norm_integral} }}")
            }
        }
    }
}

impl PerturbationFamily {
    pub fn exp_decay(rate: f64, coeff: DMatrix<f64>) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("decay rate must be > 0, got {rate}")));
        }
        if coeff.nrows() != coeff.ncols() {
            return Err(Error::InvalidParameter("perturbation coefficient must be square".into()));
        }
        let coeff_norm = spectral_norm(&coeff);
        Ok(Self::ExpDecay { rate, coeff, coeff_norm })
    }

    pub fn power_decay(exponent: f64, coeff: DMatrix<f64>) -> Result<Self> {
        if !(exponent > 1.0 && exponent.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "power decay needs exponent > 1 for an integrable norm, got {exponent}"
            )));
        }
        if coeff.nrows() != coeff.ncols() {
            return Err(Error::InvalidParameter("perturbation coefficient must be square".into()));
        }
        let coeff_norm = spectral_norm(&coeff);
        Ok(Self::PowerDecay { exponent, coeff, coeff_norm })
    }

    pub fn custom(
        b: Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>,
        dim: usize,
        norm_integral: f64,
    ) -> Result<Self> {
        if !(norm_integral >= 0.0 && norm_integral.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "norm integral must be finite and >= 0, got {norm_integral}"
            )));
        }
        Ok(Self::Custom { b, dim, norm_integral })
    }

    pub fn dim(&self) -> usize {
        match self {
            PerturbationFamily::ExpDecay { coeff, .. }
            | PerturbationFamily::PowerDecay { coeff, .. } => coeff.nrows(),
            PerturbationFamily::Custom { dim, .. } => *dim,
        }
    }

    pub fn matrix_at(&self, t: f64) -> DMatrix<f64> {
        match self {
            PerturbationFamily::ExpDecay { rate, coeff, .. } => coeff * (-rate * t).exp(),
            PerturbationFamily::PowerDecay { exponent, coeff, .. } => {
                coeff * (1.0 + t).powf(-exponent)
            }
            PerturbationFamily::Custom { b, .. } => b(t),
        }
    }

    /// `out += B(t) v` without materializing the matrix for built-in families.
    fn apply_add(&self, t: f64, v: &DVector<f64>, out: &mut DVector<f64>) {
        match self {
            PerturbationFamily::ExpDecay { rate, coeff, .. } => {
                out.gemv((-rate * t).exp(), coeff, v, 1.0);
            }
            PerturbationFamily::PowerDecay { exponent, coeff, .. } => {
                out.gemv((1.0 + t).powf(-exponent), coeff, v, 1.0);
            }
            PerturbationFamily::Custom { b, .. } => {
                let m = b(t);
                out.gemv(1.0, &m, v, 1.0);
            }
        }
    }

    /// `||B(t)||` (exact for built-in families).
    pub fn norm_at(&self, t: f64) -> f64 {
        match self {
            PerturbationFamily::ExpDecay { rate, coeff_norm, .. } => {
                coeff_norm * (-rate * t).exp()
            }
            PerturbationFamily::PowerDecay { exponent, coeff_norm, .. } => {
                coeff_norm * (1.0 + t).powf(-exponent)
            }
            PerturbationFamily::Custom { b, .. } => spectral_norm(&b(t)),
        }
    }

    /// `∫ₜ^∞ ||B(s)|| ds` in closed form; `None` for custom handles.
    pub fn tail_integral(&self, t: f64) -> Option<f64> {
        match self {
            PerturbationFamily::ExpDecay { rate, coeff_norm, .. } => {
                Some(coeff_norm * (-rate * t).exp() / rate)
            }
            PerturbationFamily::PowerDecay { exponent, coeff_norm, .. } => {
                Some(coeff_norm * (1.0 + t).powf(1.0 - exponent) / (exponent - 1.0))
            }
            PerturbationFamily::Custom { .. } => None,
        }
    }

    /// `∫₀^∞ ||B(s)|| ds`.
    pub fn norm_integral(&self) -> f64 {
        match self {
            PerturbationFamily::Custom { norm_integral, .. } => *norm_integral,
            _ => self.tail_integral(0.0).unwrap(),
        }
    }

    pub fn has_tail_control(&self) -> bool {
        !matches!(self, PerturbationFamily::Custom { .. })
    }
}

/// `v' = A v + B(t) v` with `A` constant, `∫||B|| < ∞`, and a sampled bound
/// `c` on `sup ||e^(tA)||`.
#[derive(Debug, Clone)]
pub struct PerturbedSystem {
    a: DMatrix<f64>,
    b: PerturbationFamily,
    b_norm_integral: f64,
    propagator_bound: f64,
}

impl PerturbedSystem {
    /// Builds the system, estimating the propagator bound over a horizon of
    /// `1e4` with 400 samples.
    pub fn new(a: DMatrix<f64>, b: PerturbationFamily) -> Result<Self> {
        Self::with_horizon(a, b, 1e4, 400)
    }

    pub fn with_horizon(
        a: DMatrix<f64>,
        b: PerturbationFamily,
        horizon: f64,
        samples: usize,
    ) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::InvalidParameter("system matrix must be square".into()));
        }
        if a.nrows() != b.dim() {
            return Err(Error::InvalidParameter(format!(
                "dimension mismatch: A is {}x{}, B is {}-dimensional",
                a.nrows(),
                a.ncols(),
                b.dim()
            )));
        }
        let c = propagator_bound(&a, horizon, samples)?;
        let b_norm_integral = b.norm_integral();
        Ok(Self { a, b, b_norm_integral, propagator_bound: c })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &PerturbationFamily {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn b_norm_integral(&self) -> f64 {
        self.b_norm_integral
    }

    /// Sampled estimate of `sup ||e^(tA)||` (with its 1.01 safety factor).
    pub fn propagator_bound(&self) -> f64 {
        self.propagator_bound
    }

    /// Integrate the perturbed system.
    pub fn simulate(
        &self,
        v0: &DVector<f64>,
        t_end: f64,
        rel_tol: f64,
        report: &[f64],
    ) -> Result<Trajectory> {
        if v0.len() != self.dim() {
            return Err(Error::InvalidParameter(format!(
                "initial state has dimension {}, system has {}",
                v0.len(),
                self.dim()
            )));
        }
        let opts = SolverOptions { rel_tol, ..Default::default() };
        let n = self.dim();
        let mut v = DVector::zeros(n);
        let mut av = DVector::zeros(n);
        let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
            v.copy_from_slice(y);
            av.gemv(1.0, &self.a, &v, 0.0);
            self.b.apply_add(t, &v, &mut av);
            dy.copy_from_slice(av.as_slice());
            Ok(())
        };
        let sol = integrate(rhs, 0.0, t_end, v0.as_slice(), report, &opts)?;
        Ok(Trajectory::from_ode(sol))
    }
}

/// Sampled estimate of `sup_(t>=0) ||e^(tA)||`: the max over `t = 0` and
/// log-spaced times up to the horizon, times a 1.01 safety factor. Growth
/// over the last decade raises an error — the bound would be meaningless.
/// This is a sampled estimate, not a proof.
pub fn propagator_bound(a: &DMatrix<f64>, horizon: f64, samples: usize) -> Result<f64> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon must be > 0, got {horizon}")));
    }
    if samples < 16 {
        return Err(Error::InvalidParameter(format!("need at least 16 samples, got {samples}")));
    }
    let times = {
        let mut ts = vec![0.0];
        ts.extend(log_spaced(horizon * 1e-4, horizon, samples - 1));
        ts
    };
    let norms: Vec<f64> =
        times.iter().map(|&t| spectral_norm(&matrix_exponential(a, t))).collect();
    if norms.iter().any(|v| !v.is_finite()) {
        return Err(Error::UnboundedPropagator { horizon });
    }
    let max = norms.iter().fold(0.0f64, |m, &v| m.max(v));

    // Growth detection: the max over the last decade beating everything seen
    // before it (by more than sampling noise on oscillating norms) means the
    // norms are still rising at the horizon.
    let decade_idx = times
        .iter()
        .position(|&t| t >= horizon / 10.0)
        .unwrap_or(times.len() - 1);
    let before = norms[..decade_idx].iter().fold(0.0f64, |m, &v| m.max(v));
    let last_decade = norms[decade_idx..].iter().fold(0.0f64, |m, &v| m.max(v));
    if last_decade > before * 1.05 {
        return Err(Error::UnboundedPropagator { horizon });
    }
    Ok(max * 1.01)
}

/// Uniform bound `||v(t)|| <= e^(∫||B||) ||v0||`, valid when the unperturbed
/// generator is dissipative (numerical abscissa <= 0) — a stronger hypothesis
/// than bounded propagators, checked here and rejected when it fails.
pub fn perturbed_stability_bound(sys: &PerturbedSystem, v0: &DVector<f64>) -> Result<f64> {
    let abscissa = symmetric_part_max_eigenvalue(&sys.a);
    let slack = 1e-12 * (1.0 + spectral_norm(&sys.a));
    if abscissa > slack {
        return Err(Error::InvalidParameter(format!(
            "numerical abscissa {abscissa} > 0: the uniform bound needs a dissipative generator"
        )));
    }
    Ok(sys.b_norm_integral.exp() * v0.norm())
}
