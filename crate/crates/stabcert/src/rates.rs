//! Decay-rate models and the closed-form machinery built on them.
//!
//! The central object is the dissipation rate `γ(t)`, either the power-law
//! family `γ(t) = b1 / (b0 + t)^d` or a tabulated rate with linear
//! interpolation. From `γ` the weight `μ(t) = μ(0) exp(½ ∫₀ᵗ γ)` and the decay
//! envelope `1/μ(t)` are evaluated in closed form. Everything here is an
//! immutable value; all operations are pure functions.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Natural log of the largest finite f64; exponents beyond this saturate.
const LN_F64_MAX: f64 = 709.782712893384;

fn require_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")))
    }
}

/// Power-law dissipation rate `γ(t) = b1 / (b0 + t)^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    b0: f64,
    b1: f64,
    d: f64,
}

impl PowerLaw {
    /// Requires `b0 > 0`, `b1 > 0`, `d > 0`. Exponents `d > 1` are accepted;
    /// they land in the "stability only" regime (the rate is then integrable).
    pub fn new(b0: f64, b1: f64, d: f64) -> Result<Self> {
        require_finite("b0", b0)?;
        require_finite("b1", b1)?;
        require_finite("d", d)?;
        if b0 <= 0.0 {
            return Err(Error::InvalidParameter(format!("b0 must be > 0, got {b0}")));
        }
        if b1 <= 0.0 {
            return Err(Error::InvalidParameter(format!("b1 must be > 0, got {b1}")));
        }
        if d <= 0.0 {
            return Err(Error::InvalidParameter(format!("d must be > 0, got {d}")));
        }
        Ok(Self { b0, b1, d })
    }

    pub fn b0(&self) -> f64 {
        self.b0
    }

    pub fn b1(&self) -> f64 {
        self.b1
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.b1 / (self.b0 + t).powf(self.d)
    }

    /// `∫₀ᵗ γ(s) ds` in closed form, written cancellation-free:
    /// `b1 · b0^(1-d) · expm1((1-d) ln1p(t/b0)) / (1-d)` for `d ≠ 1` and
    /// `b1 · ln1p(t/b0)` for `d = 1`.
    pub fn integral(&self, t: f64) -> f64 {
        let log_ratio = (t / self.b0).ln_1p();
        if self.d == 1.0 {
            self.b1 * log_ratio
        } else {
            let e = 1.0 - self.d;
            self.b1 * self.b0.powf(e) * (e * log_ratio).exp_m1() / e
        }
    }

    /// `∫₀^∞ γ`, finite exactly when `d > 1`.
    pub fn total_integral(&self) -> Option<f64> {
        if self.d > 1.0 {
            Some(self.b1 * self.b0.powf(1.0 - self.d) / (self.d - 1.0))
        } else {
            None
        }
    }
}

/// Tabulated rate: linear interpolation between knots, exact integration of
/// the interpolant (composite trapezoid). Queries outside the grid are errors.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedRate {
    grid: Vec<f64>,
    values: Vec<f64>,
    /// prefix[i] = ∫ over [grid[0], grid[i]] of the interpolant
    prefix: Vec<f64>,
}

impl TabulatedRate {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "tabulated rate needs >= 2 knots and matching lengths, got {} and {}",
                grid.len(),
                values.len()
            )));
        }
        for (&t, &v) in grid.iter().zip(&values) {
            require_finite("grid knot", t)?;
            require_finite("rate value", v)?;
            if v < 0.0 {
                return Err(Error::InvalidParameter(format!("rate values must be >= 0, got {v}")));
            }
        }
        if !grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter("grid must be strictly increasing".into()));
        }
        let mut prefix = Vec::with_capacity(grid.len());
        prefix.push(0.0);
        for i in 1..grid.len() {
            let panel = 0.5 * (values[i - 1] + values[i]) * (grid[i] - grid[i - 1]);
            prefix.push(prefix[i - 1] + panel);
        }
        Ok(Self { grid, values, prefix })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        let (lo, hi) = (self.grid[0], *self.grid.last().unwrap());
        if !t.is_finite() || t < lo || t > hi {
            Err(Error::OutOfDomain { t, lo, hi })
        } else {
            Ok(())
        }
    }

    /// Index of the panel containing `t` (last panel for `t` at the right end).
    fn panel(&self, t: f64) -> usize {
        match self.grid.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(self.grid.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.grid.len() - 2),
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        let i = self.panel(t);
        let w = (t - self.grid[i]) / (self.grid[i + 1] - self.grid[i]);
        Ok(self.values[i] + w * (self.values[i + 1] - self.values[i]))
    }

    /// ∫ from the first knot up to `t` of the interpolant.
    fn integral_from_start(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        let i = self.panel(t);
        let v_t = self.values[i]
            + (t - self.grid[i]) / (self.grid[i + 1] - self.grid[i])
                * (self.values[i + 1] - self.values[i]);
        Ok(self.prefix[i] + 0.5 * (self.values[i] + v_t) * (t - self.grid[i]))
    }

    /// `∫₀ᵗ γ`; both 0 and `t` must lie inside the grid.
    pub fn integral(&self, t: f64) -> Result<f64> {
        Ok(self.integral_from_start(t)? - self.integral_from_start(0.0)?)
    }
}

/// A dissipation-rate family: decaying power law or tabulated data.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaModel {
    PowerLaw(PowerLaw),
    Tabulated(TabulatedRate),
}

impl GammaModel {
    pub fn power_law(b0: f64, b1: f64, d: f64) -> Result<Self> {
        Ok(GammaModel::PowerLaw(PowerLaw::new(b0, b1, d)?))
    }

    pub fn tabulated(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Ok(GammaModel::Tabulated(TabulatedRate::new(grid, values)?))
    }

    pub fn as_power_law(&self) -> Option<&PowerLaw> {
        match self {
            GammaModel::PowerLaw(p) => Some(p),
            GammaModel::Tabulated(_) => None,
        }
    }

    /// `γ(t)`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidParameter(format!("time must be >= 0, got {t}")));
        }
        match self {
            GammaModel::PowerLaw(p) => Ok(p.eval(t)),
            GammaModel::Tabulated(tab) => tab.eval(t),
        }
    }

    /// `∫₀ᵗ γ(s) ds`, nondecreasing in `t`.
    pub fn integral(&self, t: f64) -> Result<f64> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidParameter(format!("time must be >= 0, got {t}")));
        }
        match self {
            GammaModel::PowerLaw(p) => Ok(p.integral(t)),
            GammaModel::Tabulated(tab) => tab.integral(t),
        }
    }
}

/// Growth bound on the nonlinearity: `||F(t,u)|| <= c0 ||u||^(1+p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationBound {
    c0: f64,
    p: f64,
}

impl PerturbationBound {
    pub fn new(c0: f64, p: f64) -> Result<Self> {
        require_finite("c0", c0)?;
        require_finite("p", p)?;
        if c0 < 0.0 {
            return Err(Error::InvalidParameter(format!("c0 must be >= 0, got {c0}")));
        }
        if p <= 0.0 {
            return Err(Error::InvalidParameter(format!("p must be > 0, got {p}")));
        }
        Ok(Self { c0, p })
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

/// A nonnegative scalar coefficient of time, used for the superlinear weight
/// `a(t)` and the forcing bound `β(t)`.
#[derive(Clone)]
pub enum Coefficient {
    Zero,
    Constant(f64),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// Bound on an additive forcing term: a nonnegative `β(t)`.
pub type ForcingBound = Coefficient;

impl Coefficient {
    pub fn constant(c: f64) -> Result<Self> {
        require_finite("coefficient", c)?;
        if c < 0.0 {
            return Err(Error::InvalidParameter(format!("coefficient must be >= 0, got {c}")));
        }
        Ok(if c == 0.0 { Coefficient::Zero } else { Coefficient::Constant(c) })
    }

    pub fn function(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Coefficient::Function(Arc::new(f))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Coefficient::Zero)
    }

    /// Evaluate, rejecting negative or non-finite values.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let v = match self {
            Coefficient::Zero => 0.0,
            Coefficient::Constant(c) => *c,
            Coefficient::Function(f) => f(t),
        };
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "coefficient must be finite and >= 0, got {v} at t = {t}"
            )));
        }
        Ok(v)
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Zero => write!(f, "Zero"),
            Coefficient::Constant(c) => write!(f, "Constant({c})"),
            Coefficient::Function(_) => write!(f, "Function(..)"),
        }
    }
}

/// `ln μ(t) = ln μ(0) + ½ ∫₀ᵗ γ`. Always finite for finite `t`, which makes
/// it the right quantity for dominance products `g(t)·μ(t)` at late times.
pub fn mu_log(mu0: f64, gamma: &GammaModel, t: f64) -> Result<f64> {
    if !(mu0 > 0.0) || !mu0.is_finite() {
        return Err(Error::InvalidParameter(format!("mu0 must be > 0, got {mu0}")));
    }
    Ok(mu0.ln() + 0.5 * gamma.integral(t)?)
}

/// `μ(t)` with explicit saturation: when `exp` would overflow the value is
/// pinned at `f64::MAX` and flagged, never returned as a silent infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuValue {
    /// `ln μ(t)`, always finite.
    pub log: f64,
    /// True when `μ(t)` exceeds the largest finite double.
    pub saturated: bool,
}

impl MuValue {
    pub fn value(&self) -> f64 {
        if self.saturated {
            f64::MAX
        } else {
            self.log.exp()
        }
    }
}

/// `μ(t) = μ(0) e^(½ ∫₀ᵗ γ)`.
pub fn mu_eval(mu0: f64, gamma: &GammaModel, t: f64) -> Result<MuValue> {
    let log = mu_log(mu0, gamma, t)?;
    Ok(MuValue { log, saturated: log > LN_F64_MAX })
}

/// `1/μ(t)` with an explicit underflow flag: once `μ` saturates (or the
/// reciprocal rounds to zero) the envelope is reported as an underflow to
/// zero at the query time rather than a bare 0.0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeValue {
    pub value: f64,
    pub underflow: bool,
}

pub fn envelope_from_mu_log(log_mu: f64) -> EnvelopeValue {
    let value = (-log_mu).exp();
    EnvelopeValue { value, underflow: value == 0.0 }
}
