//! Closed-form and monotonicity properties of the rate/weight/envelope stack.

use approx::assert_relative_eq;
use proptest::prelude::*;

use stabcert::{certify, mu_eval, GammaModel, PerturbationBound, PowerLaw};

/// For d = 1 the weight has the algebraic closed form
/// `mu0 ((b0+t)/b0)^(b1/2)`; the exp-of-integral route must agree to 1e-12
/// relative across a wide log-spaced grid.
#[test]
fn d_equal_one_weight_matches_algebraic_closed_form() {
    for (b0, b1, mu0) in [(1.0, 4.0, 1.0), (0.3, 2.5, 2.0), (7.0, 0.8, 0.25)] {
        let gamma = GammaModel::power_law(b0, b1, 1.0).unwrap();
        for k in -3..=6 {
            let t = 10f64.powi(k);
            let via_integral = mu_eval(mu0, &gamma, t).unwrap().value();
            let closed = mu0 * ((b0 + t) / b0).powf(b1 / 2.0);
            assert_relative_eq!(via_integral, closed, max_relative = 1e-12);
        }
    }
}

#[test]
fn envelope_decays_to_zero_when_rate_integral_diverges() {
    // Any d <= 1 pushes the envelope below any fixed threshold eventually.
    for d in [0.25, 0.5, 0.9, 1.0] {
        let gamma = GammaModel::power_law(1.0, 2.0, d).unwrap();
        let cert = certify(&gamma, PerturbationBound::new(0.0, 1.0).unwrap(), 0.5, Some(1.0))
            .unwrap();
        let mut previous = f64::INFINITY;
        let mut last = f64::INFINITY;
        for k in 1..=6 {
            let t = 10f64.powi(k);
            let env = cert.envelope(t).unwrap();
            let value = if env.underflow { 0.0 } else { env.value };
            assert!(value <= previous, "envelope must not increase");
            previous = value;
            last = value;
        }
        assert!(last < 1e-6, "d = {d}: envelope stuck at {last}");
    }
}

#[test]
fn envelope_approaches_positive_limit_when_rate_is_integrable() {
    // d > 1: limit is exp(-(1/2) b1 b0^(1-d)/(d-1)) / mu0. The remaining tail
    // decays like t^(1-d), so the sample time is sized per exponent.
    for (b0, b1, d, mu0, t) in
        [(1.0, 1.0, 2.0, 1.0, 1e8), (2.0, 3.0, 1.5, 0.5, 1e14), (1.0, 1.0, 2.0, 1.0, 1e6)]
    {
        let pl = PowerLaw::new(b0, b1, d).unwrap();
        let gamma = GammaModel::PowerLaw(pl);
        let limit = (-0.5 * pl.total_integral().unwrap()).exp() / mu0;
        let env = (-(mu0.ln() + 0.5 * gamma.integral(t).unwrap())).exp();
        assert_relative_eq!(env, limit, max_relative = 1e-6);
        assert!(env > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// The envelope is non-increasing along any increasing time grid.
    #[test]
    fn envelope_is_monotone_non_increasing(
        b0 in 0.1f64..10.0,
        b1 in 0.05f64..20.0,
        d in 0.05f64..3.0,
        mu0 in 0.1f64..10.0,
    ) {
        let gamma = GammaModel::power_law(b0, b1, d).unwrap();
        let mut previous = f64::INFINITY;
        for k in 0..60 {
            let t = 1e-3 * 1.5f64.powi(k);
            let m = mu_eval(mu0, &gamma, t).unwrap();
            let env = (-m.log).exp();
            prop_assert!(env <= previous * (1.0 + 1e-14));
            previous = env;
        }
    }

    /// The weight integral is nondecreasing in t for any model.
    #[test]
    fn rate_integral_is_nondecreasing(
        b0 in 0.1f64..10.0,
        b1 in 0.05f64..20.0,
        d in 0.05f64..3.0,
    ) {
        let gamma = GammaModel::power_law(b0, b1, d).unwrap();
        let mut previous = -1.0;
        for k in 0..40 {
            let t = 0.01 * 2f64.powi(k.min(30));
            let integral = gamma.integral(t).unwrap();
            prop_assert!(integral >= previous);
            previous = integral;
        }
    }
}
