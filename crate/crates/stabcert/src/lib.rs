//! Stability certificates for evolution equations whose dissipation rate
//! decays to zero.
//!
//! The object of study is `u' = A(t) u + F(t, u)` where the quadratic form of
//! `A(t)` is bounded by `-γ(t) ||u||²` with `γ(t) → 0` (so no fixed spectral
//! margin exists) and the nonlinearity obeys `||F(t, u)|| <= c0 ||u||^(1+p)`.
//! For power-law rates `γ(t) = b1/(b0+t)^d` the crate evaluates closed-form
//! sufficient conditions under which every solution norm is dominated by the
//! explicit envelope `1/μ(t)`, `μ(t) = μ(0) e^(½ ∫₀ᵗ γ)`, and that envelope
//! decays to zero exactly when `d <= 1`.
//!
//! The pieces:
//!
//! - [`rates`]: rate models, growth bounds, and the `μ`/envelope evaluators.
//! - [`certificate`]: the condition ledger, minimal-`b1` search, grid
//!   verification of the general weighted inequality, regime classification,
//!   and the certificate JSON document.
//! - [`comparison`]: a brute-force scalar oracle for the comparison equation
//!   `g' = -γ g + a g^(1+p) + β`, with blow-up detection and envelope
//!   dominance checks.
//! - [`evolution`]: matrix realizations whose symmetric part is exactly
//!   `-γ(t) I`, trajectory simulation, and envelope validation on vector
//!   norms.
//! - [`asymptotic`]: constant-coefficient systems under integrable
//!   perturbations — uniform norm bounds and asymptotic matching via the tail
//!   integral equation.
//! - [`ode`]: the shared embedded Runge-Kutta 5(4) integrator.
//! - [`io`]: the CSV/JSON interchange formats.

pub mod asymptotic;
pub mod certificate;
pub mod comparison;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod ode;
pub mod rates;

pub use certificate::{
    certify, certify_general, classify_regime, search_b1, verify_general_mu, Certificate,
    CertificateBranch, ConditionId, ConditionReport, Envelope, GeneralMuReport, GeneralMuSpec,
    MuFunction, Regime,
};
pub use comparison::{
    check_dominance, integrate_scalar, integrate_scalar_sampled, DominanceReport, ScalarProblem,
    ScalarStatus, ScalarTrajectory,
};
pub use error::{Error, Result};
pub use evolution::{
    numerical_abscissa, simulate, simulate_sampled, verify_trajectory_envelope, Nonlinearity,
    NonlinearitySpec, TimeVaryingSystem, Trajectory,
};
pub use rates::{
    mu_eval, mu_log, Coefficient, EnvelopeValue, ForcingBound, GammaModel, MuValue,
    PerturbationBound, PowerLaw, TabulatedRate,
};
