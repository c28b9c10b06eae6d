//! TOML run configuration: `[gamma]`, `[bound]`, `[run]`, `[system]`,
//! `[sweep]`, `[levinson]`. Unknown keys are rejected so typos surface as
//! validation errors instead of silently applied defaults.

use serde::Deserialize;

use stabcert::{Coefficient, GammaModel, PerturbationBound};

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub gamma: Option<GammaSection>,
    pub bound: Option<BoundSection>,
    #[serde(default)]
    pub run: RunSection,
    pub system: Option<SystemSection>,
    pub sweep: Option<SweepSection>,
    pub levinson: Option<LevinsonSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaSection {
    pub b0: Option<f64>,
    pub b1: Option<f64>,
    pub d: Option<f64>,
    pub grid: Option<Vec<f64>>,
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSection {
    pub c0: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub command: Option<String>,
    pub g0: f64,
    pub mu0: Option<f64>,
    pub t_end: f64,
    pub rel_tol: f64,
    pub seed: u64,
    pub report_points: usize,
    pub write_states: bool,
    pub blow_up_threshold: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            command: None,
            g0: 0.5,
            mu0: None,
            t_end: 1000.0,
            rel_tol: 1e-8,
            seed: 0,
            report_points: 256,
            write_states: false,
            blow_up_threshold: stabcert::comparison::BLOW_UP_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub dim: usize,
    #[serde(default)]
    pub omega: f64,
    #[serde(default)]
    pub skew_seed: u64,
    #[serde(default = "default_nonlinearity")]
    pub nonlinearity: String,
    pub cap: Option<f64>,
    #[serde(default)]
    pub rotation_seed: u64,
    #[serde(default)]
    pub direction_seed: u64,
}

fn default_nonlinearity() -> String {
    "radial".to_string()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub instances: usize,
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
    #[serde(default = "default_omega_max")]
    pub omega_max: f64,
    #[serde(default = "default_sweep_t_end")]
    pub t_end: f64,
    #[serde(default = "default_sweep_rel_tol")]
    pub rel_tol: f64,
}

fn default_max_dim() -> usize {
    8
}

fn default_omega_max() -> f64 {
    100.0
}

fn default_sweep_t_end() -> f64 {
    1000.0
}

fn default_sweep_rel_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevinsonSection {
    pub a: Vec<Vec<f64>>,
    pub u0: Vec<f64>,
    #[serde(default = "default_b_family")]
    pub b_family: String,
    pub b_rate: Option<f64>,
    pub b_exponent: Option<f64>,
    #[serde(default = "default_b_scale")]
    pub b_scale: f64,
    #[serde(default)]
    pub b_seed: u64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    pub t_start: Option<f64>,
    #[serde(default = "default_match_tol")]
    pub tol: f64,
    #[serde(default = "default_sample_times")]
    pub sample_times: Vec<f64>,
    #[serde(default = "default_propagator_horizon")]
    pub propagator_horizon: f64,
}

fn default_b_family() -> String {
    "exp".to_string()
}

fn default_b_scale() -> f64 {
    1.0
}

fn default_t_max() -> f64 {
    25.0
}

fn default_match_tol() -> f64 {
    1e-9
}

fn default_sample_times() -> Vec<f64> {
    vec![2.0, 5.0, 10.0]
}

fn default_propagator_horizon() -> f64 {
    1e4
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        if text.trim().is_empty() {
            return Err(CliError::validation("empty config"));
        }
        toml::from_str(text).map_err(|e| CliError::validation(format!("config parse: {e}")))
    }

    pub fn gamma_model(&self) -> Result<GammaModel, CliError> {
        let g = self
            .gamma
            .as_ref()
            .ok_or_else(|| CliError::validation("missing [gamma] section"))?;
        match (g.b0, g.b1, g.d, &g.grid, &g.values) {
            (Some(b0), Some(b1), Some(d), None, None) => {
                GammaModel::power_law(b0, b1, d).map_err(CliError::from)
            }
            (None, None, None, Some(grid), Some(values)) => {
                GammaModel::tabulated(grid.clone(), values.clone()).map_err(CliError::from)
            }
            _ => Err(CliError::validation(
                "[gamma] needs either {b0, b1, d} or {grid, values}, not a mixture",
            )),
        }
    }

    pub fn perturbation_bound(&self) -> Result<PerturbationBound, CliError> {
        let b = self
            .bound
            .ok_or_else(|| CliError::validation("missing [bound] section"))?;
        PerturbationBound::new(b.c0, b.p).map_err(CliError::from)
    }

    /// `a(t) ≡ c0` for the scalar oracle.
    pub fn oracle_coefficient(&self) -> Result<Coefficient, CliError> {
        let b = self.perturbation_bound()?;
        Coefficient::constant(b.c0()).map_err(CliError::from)
    }

    /// Reject configs whose `[run] command` disagrees with the subcommand.
    pub fn check_command(&self, expected: &str) -> Result<(), CliError> {
        if let Some(cmd) = &self.run.command {
            if cmd != expected {
                return Err(CliError::validation(format!(
                    "config declares command = {cmd:?} but the {expected:?} subcommand was invoked"
                )));
            }
        }
        Ok(())
    }
}
