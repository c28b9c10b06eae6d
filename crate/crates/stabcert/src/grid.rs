//! Deterministic time grids used for sampling, reporting and grid-verified checks.

/// `n` logarithmically spaced points from `lo` to `hi` inclusive (`lo > 0`).
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2, "log_spaced needs 0 < lo < hi and n >= 2");
    let (llo, lhi) = (lo.ln(), hi.ln());
    let step = (lhi - llo) / (n - 1) as f64;
    let mut out: Vec<f64> = (0..n).map(|i| (llo + step * i as f64).exp()).collect();
    // endpoints exact regardless of rounding in exp/ln
    out[0] = lo;
    out[n - 1] = hi;
    out
}

/// Report grid for trajectories on `[0, t_end]`: t = 0 followed by `n - 1`
/// log-spaced times ending exactly at `t_end`. Late times are dense in log
/// scale, which is where envelope checks need resolution.
pub fn report_times(t_end: f64, n: usize) -> Vec<f64> {
    assert!(t_end > 0.0 && n >= 2);
    let lo = (t_end * 1e-6).min(1e-3).max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(n);
    out.push(0.0);
    out.extend(log_spaced(lo, t_end, n - 1));
    out
}

/// Grid for pointwise condition checks on `[0, horizon]`: 0 plus log-spaced
/// points from `horizon * 1e-8` up to the horizon.
pub fn check_grid(horizon: f64, n: usize) -> Vec<f64> {
    assert!(horizon > 0.0 && n >= 2);
    let mut out = Vec::with_capacity(n);
    out.push(0.0);
    out.extend(log_spaced(horizon * 1e-8, horizon, n - 1));
    out
}
