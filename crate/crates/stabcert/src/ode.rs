//! Embedded Dormand–Prince 5(4) integrator with PI step-size control and
//! 4th-order dense output.
//!
//! One integrator serves the whole crate: the scalar comparison equation, the
//! matrix-valued evolution systems and the backward extension of matched
//! solutions. The certified dynamics are nonstiff (the dissipation rate is
//! bounded), so an explicit pair is the right tool; accuracy, not stability,
//! is the constraint.

use crate::error::{Error, Result};

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Error weights (5th order minus embedded 4th order).
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Dense-output weights for the 4th-order continuous extension.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

// PI controller (Hairer's DOPRI5 settings).
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub rel_tol: f64,
    /// Absolute floor in the error weights; effectively pure relative control
    /// that stays well-defined as the state decays toward zero.
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Stop (and report) once the sup-norm of the state reaches this value.
    pub threshold: Option<f64>,
    /// Clamp every component at zero after an accepted step. The exact flows
    /// integrated here preserve nonnegativity; the numerics may undershoot.
    pub nonnegative: bool,
    pub h_max: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-300,
            max_steps: 50_000_000,
            threshold: None,
            nonnegative: false,
            h_max: None,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol >= 1e-12 && self.rel_tol <= 1e-2) {
            return Err(Error::InvalidParameter(format!(
                "rel_tol must lie in [1e-12, 1e-2], got {}",
                self.rel_tol
            )));
        }
        if !(self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter("abs_tol must be > 0".into()));
        }
        Ok(())
    }
}

/// How an integration ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    /// Reached `t_end`.
    Reached,
    /// Sup-norm of the state crossed the configured threshold at time `t`.
    Threshold { t: f64 },
    /// The controller drove the step below `1e-14 (|t| + 1)`.
    StepUnderflow { t: f64 },
    /// Gave up after `max_steps` accepted+rejected steps.
    StepLimit { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub min_step: f64,
}

#[derive(Debug, Clone)]
pub struct OdeSolution {
    /// Accepted step endpoints, starting at `t0`.
    pub step_times: Vec<f64>,
    pub step_states: Vec<Vec<f64>>,
    /// Dense-output samples at the requested report times.
    pub samples: Vec<(f64, Vec<f64>)>,
    pub termination: Termination,
    pub diagnostics: Diagnostics,
}

impl OdeSolution {
    pub fn completed(&self) -> bool {
        matches!(self.termination, Termination::Reached)
    }

    /// Accepted steps and report samples merged into one increasing series
    /// (duplicate times keep the accepted-step entry).
    pub fn merged_series(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = self.step_times.len() + self.samples.len();
        let mut times = Vec::with_capacity(n);
        let mut states = Vec::with_capacity(n);
        let (mut i, mut j) = (0usize, 0usize);
        while i < self.step_times.len() || j < self.samples.len() {
            let take_step = match (self.step_times.get(i), self.samples.get(j)) {
                (Some(&ts), Some(&(tr, _))) => ts <= tr,
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => break,
            };
            if take_step {
                if self.samples.get(j).is_some_and(|(tr, _)| *tr == self.step_times[i]) {
                    j += 1; // drop the duplicate sample
                }
                times.push(self.step_times[i]);
                states.push(self.step_states[i].clone());
                i += 1;
            } else {
                let (tr, ref y) = self.samples[j];
                if times.last() != Some(&tr) {
                    times.push(tr);
                    states.push(y.clone());
                }
                j += 1;
            }
        }
        (times, states)
    }
}

fn sup_norm(y: &[f64]) -> f64 {
    y.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
}

/// Initial step-size heuristic (order-5 version of Hairer's `hinit`).
fn initial_step<F>(
    f: &mut F,
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    t_end: f64,
    opts: &SolverOptions,
) -> Result<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y0.len();
    let sc = opts.abs_tol + opts.rel_tol * sup_norm(y0);
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..n {
        dnf += (f0[i] / sc).powi(2);
        dny += (y0[i] / sc).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
    h = h.min(t_end - t0);
    if let Some(hm) = opts.h_max {
        h = h.min(hm);
    }

    let mut y1 = vec![0.0; n];
    for i in 0..n {
        y1[i] = y0[i] + h * f0[i];
    }
    let mut f1 = vec![0.0; n];
    f(t0 + h, &y1, &mut f1)?;
    let mut der2 = 0.0;
    for i in 0..n {
        der2 += ((f1[i] - f0[i]) / sc).powi(2);
    }
    let der2 = der2.sqrt() / h;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(0.2)
    };
    h = (100.0 * h).min(h1).min(t_end - t0);
    if let Some(hm) = opts.h_max {
        h = h.min(hm);
    }
    Ok(h.max(f64::MIN_POSITIVE))
}

/// Integrate `y' = f(t, y)` from `t0` to `t_end`, sampling dense output at the
/// (sorted, within-range) `report` times. The right-hand side is fallible so
/// that domain errors in tabulated data surface instead of poisoning states.
pub fn integrate<F>(
    mut f: F,
    t0: f64,
    t_end: f64,
    y0: &[f64],
    report: &[f64],
    opts: &SolverOptions,
) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    opts.validate()?;
    if !(t_end > t0) {
        return Err(Error::InvalidParameter(format!("need t_end > t0, got [{t0}, {t_end}]")));
    }
    debug_assert!(report.windows(2).all(|w| w[0] <= w[1]), "report times must be sorted");

    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;

    let mut k = vec![vec![0.0f64; n]; 7];
    let mut y_stage = vec![0.0f64; n];
    let mut y_new = vec![0.0f64; n];

    f(t, &y, &mut k[0])?;
    let mut h = initial_step(&mut f, t0, &y, &k[0], t_end, opts)?;

    let mut step_times = vec![t0];
    let mut step_states = vec![y.clone()];
    let mut samples: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut next_report = report.iter().position(|&r| r > t0).unwrap_or(report.len());
    // report times at or before t0 sample the initial state
    for &r in &report[..next_report] {
        samples.push((r, y.clone()));
    }

    let mut diagnostics =
        Diagnostics { steps_accepted: 0, steps_rejected: 0, min_step: f64::INFINITY };
    let mut fac_old: f64 = 1e-4;
    let mut rejected_last = false;
    let mut k1_stale = false;

    loop {
        if t >= t_end {
            return Ok(OdeSolution {
                step_times,
                step_states,
                samples,
                termination: Termination::Reached,
                diagnostics,
            });
        }
        if diagnostics.steps_accepted + diagnostics.steps_rejected >= opts.max_steps {
            return Ok(OdeSolution {
                step_times,
                step_states,
                samples,
                termination: Termination::StepLimit { t },
                diagnostics,
            });
        }
        let h_floor = 1e-14 * (t.abs() + 1.0);
        if h < h_floor {
            return Ok(OdeSolution {
                step_times,
                step_states,
                samples,
                termination: Termination::StepUnderflow { t },
                diagnostics,
            });
        }
        if t + 1.01 * h >= t_end {
            h = t_end - t;
        }
        if k1_stale {
            f(t, &y, &mut k[0])?;
            k1_stale = false;
        }

        // Stages 2..7 (stage 7 evaluates at the 5th-order solution: FSAL).
        for i in 0..n {
            y_stage[i] = y[i] + h * A21 * k[0][i];
        }
        f(t + C2 * h, &y_stage, &mut k[1])?;
        for i in 0..n {
            y_stage[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
        }
        f(t + C3 * h, &y_stage, &mut k[2])?;
        for i in 0..n {
            y_stage[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
        }
        f(t + C4 * h, &y_stage, &mut k[3])?;
        for i in 0..n {
            y_stage[i] =
                y[i] + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
        }
        f(t + C5 * h, &y_stage, &mut k[4])?;
        for i in 0..n {
            y_stage[i] = y[i]
                + h * (A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i]
                    + A65 * k[4][i]);
        }
        f(t + h, &y_stage, &mut k[5])?;
        for i in 0..n {
            y_new[i] = y[i]
                + h * (A71 * k[0][i] + A73 * k[2][i] + A74 * k[3][i] + A75 * k[4][i]
                    + A76 * k[5][i]);
        }
        f(t + h, &y_new, &mut k[6])?;

        // RMS of the embedded difference, scaled relative to the state norm
        // (with the absolute floor): components passing through zero must not
        // collapse the scale while the solution decays toward zero as a whole.
        let sc = opts.abs_tol + opts.rel_tol * sup_norm(&y).max(sup_norm(&y_new));
        let mut err = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i]
                    + E7 * k[6][i]);
            err += (e / sc).powi(2);
        }
        let err = (err / n as f64).sqrt();

        if !err.is_finite() {
            diagnostics.steps_rejected += 1;
            h *= 0.1;
            rejected_last = true;
            continue;
        }

        let fac11 = err.powf(EXPO1);
        if err <= 1.0 {
            // Accept.
            let fac = (fac11 / fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h / fac;
            if rejected_last {
                h_new = h_new.min(h);
            }
            fac_old = err.max(1e-4);
            rejected_last = false;

            let t_new = t + h;
            // Dense samples inside (t, t_new].
            while next_report < report.len() && report[next_report] <= t_new {
                let r = report[next_report];
                let theta = ((r - t) / h).clamp(0.0, 1.0);
                let mut yr = vec![0.0; n];
                dense_eval(&y, &y_new, &k, h, theta, &mut yr);
                samples.push((r, yr));
                next_report += 1;
            }

            std::mem::swap(&mut y, &mut y_new);
            if opts.nonnegative {
                let mut changed = false;
                for v in y.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                        changed = true;
                    }
                }
                if changed {
                    k1_stale = true; // FSAL derivative no longer matches the state
                }
            }
            if !k1_stale {
                k.swap(0, 6); // FSAL: k7 becomes next k1
            }
            t = t_new;
            diagnostics.steps_accepted += 1;
            diagnostics.min_step = diagnostics.min_step.min(h);
            step_times.push(t);
            step_states.push(y.clone());

            if let Some(thresh) = opts.threshold {
                if sup_norm(&y) >= thresh {
                    return Ok(OdeSolution {
                        step_times,
                        step_states,
                        samples,
                        termination: Termination::Threshold { t },
                        diagnostics,
                    });
                }
            }
            if let Some(hm) = opts.h_max {
                h_new = h_new.min(hm);
            }
            h = h_new;
        } else {
            diagnostics.steps_rejected += 1;
            h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
            rejected_last = true;
        }
    }
}

/// 4th-order continuous extension on an accepted step.
fn dense_eval(y0: &[f64], y1: &[f64], k: &[Vec<f64>], h: f64, theta: f64, out: &mut [f64]) {
    let th1 = 1.0 - theta;
    for i in 0..out.len() {
        let ydiff = y1[i] - y0[i];
        let bspl = h * k[0][i] - ydiff;
        let r5 = h
            * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i]
                + D7 * k[6][i]);
        let r4 = ydiff - h * k[6][i] - bspl;
        out[i] = y0[i] + theta * (ydiff + th1 * (bspl + theta * (r4 + th1 * r5)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let opts = SolverOptions { rel_tol: 1e-10, ..Default::default() };
        let sol = integrate(
            |_t, y, dy| {
                dy[0] = -y[0];
                Ok(())
            },
            0.0,
            5.0,
            &[1.0],
            &[],
            &opts,
        )
        .unwrap();
        assert!(sol.completed());
        let y_end = sol.step_states.last().unwrap()[0];
        assert_relative_eq!(y_end, (-5.0f64).exp(), max_relative = 1e-9);
    }

    #[test]
    fn dense_output_tracks_harmonic_oscillator() {
        let opts = SolverOptions { rel_tol: 1e-10, ..Default::default() };
        let report: Vec<f64> = (0..=40).map(|i| i as f64 * 0.25).collect();
        let sol = integrate(
            |_t, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok(())
            },
            0.0,
            10.0,
            &[1.0, 0.0],
            &report,
            &opts,
        )
        .unwrap();
        assert_eq!(sol.samples.len(), report.len());
        for (t, y) in &sol.samples {
            assert_relative_eq!(y[0], t.cos(), epsilon = 1e-7);
            assert_relative_eq!(y[1], -t.sin(), epsilon = 1e-7);
        }
    }

    #[test]
    fn threshold_stops_blowup() {
        // y' = y^2, y(0) = 2 escapes at t = 0.5.
        let opts = SolverOptions {
            rel_tol: 1e-10,
            threshold: Some(1e12),
            ..Default::default()
        };
        let sol = integrate(
            |_t, y, dy| {
                dy[0] = y[0] * y[0];
                Ok(())
            },
            0.0,
            1.0,
            &[2.0],
            &[],
            &opts,
        )
        .unwrap();
        match sol.termination {
            Termination::Threshold { t } => assert_relative_eq!(t, 0.5, epsilon = 1e-3),
            other => panic!("expected threshold termination, got {other:?}"),
        }
    }

    #[test]
    fn tolerance_outside_range_is_rejected() {
        let opts = SolverOptions { rel_tol: 1.0, ..Default::default() };
        let r = integrate(|_t, _y, dy| { dy[0] = 0.0; Ok(()) }, 0.0, 1.0, &[1.0], &[], &opts);
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn rhs_errors_propagate() {
        let opts = SolverOptions::default();
        let r = integrate(
            |t, _y, _dy| {
                if t > 0.5 {
                    Err(Error::OutOfDomain { t, lo: 0.0, hi: 0.5 })
                } else {
                    Ok(())
                }
            },
            0.0,
            1.0,
            &[1.0],
            &[],
            &opts,
        );
        assert!(matches!(r, Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn merged_series_is_increasing_and_deduplicated() {
        let opts = SolverOptions { rel_tol: 1e-6, ..Default::default() };
        let report = vec![0.0, 0.5, 1.0];
        let sol = integrate(
            |_t, y, dy| {
                dy[0] = -y[0];
                Ok(())
            },
            0.0,
            1.0,
            &[1.0],
            &report,
            &opts,
        )
        .unwrap();
        let (times, states) = sol.merged_series();
        assert_eq!(times.len(), states.len());
        assert!(times.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(times[0], 0.0);
        assert_eq!(*times.last().unwrap(), 1.0);
    }
}
