//! Oracle-side validation of the comparison lemma: certified scalar problems
//! never blow up and stay under their envelope; without the initial-data
//! condition, adversarial draws do escape in finite time.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stabcert::certificate::default_mu0;
use stabcert::comparison::{integrate_scalar_sampled, ScalarStatus};
use stabcert::grid::report_times;
use stabcert::{
    certify, check_dominance, search_b1, Coefficient, GammaModel, PerturbationBound, ScalarProblem,
};

#[test]
fn certified_draws_never_blow_up_and_stay_dominated() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let report = report_times(1e3, 64);
    for i in 0..120 {
        let b0 = 10f64.powf(rng.random_range(-1.0..1.0));
        let d = rng.random_range(0.05..=1.0);
        let p = rng.random_range(0.2..=3.0);
        let c0 = rng.random_range(0.0..=5.0);
        let g0 = rng.random_range(0.05..=2.0);
        let mu0 = default_mu0(g0);
        let bound = PerturbationBound::new(c0, p).unwrap();
        let b1 = search_b1(b0, d, &bound, mu0).unwrap();
        let gamma = GammaModel::power_law(b0, b1, d).unwrap();
        let cert = certify(&gamma, bound, g0, Some(mu0)).unwrap();
        assert!(cert.valid());

        let problem = ScalarProblem::new(
            gamma,
            Coefficient::constant(c0).unwrap(),
            Coefficient::Zero,
            p,
            g0,
        )
        .unwrap();
        let traj = integrate_scalar_sampled(&problem, 1e3, 1e-7, &report).unwrap();
        assert_eq!(traj.status, ScalarStatus::Completed, "draw {i} blew up");
        let verdict = check_dominance(&traj, &cert).unwrap();
        assert!(
            verdict.pass,
            "draw {i}: product {} at t = {}",
            verdict.max_product, verdict.at
        );
    }
}

/// With the initial-data condition violated and a strong superlinear term,
/// finite-time escape happens for some draws. The conditions are sufficient,
/// not necessary, so this is recorded as a count with a weak assertion.
#[test]
fn adversarial_draws_exhibit_blow_up() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut blow_ups = 0;
    for _ in 0..100 {
        let b0 = 10f64.powf(rng.random_range(-1.0..1.0));
        let d = rng.random_range(0.05..=1.0);
        // Weak dissipation, strong superlinearity, initial data above 1/mu0.
        let b1 = 0.05;
        let c0 = 10.0;
        let p = 1.0;
        let mu0 = rng.random_range(0.5..=2.0);
        let g0 = rng.random_range(1.1..=3.0) / mu0;
        assert!(mu0 * g0 > 1.0);
        let gamma = GammaModel::power_law(b0, b1, d).unwrap();
        let problem = ScalarProblem::new(
            gamma,
            Coefficient::constant(c0).unwrap(),
            Coefficient::Zero,
            p,
            g0,
        )
        .unwrap();
        let traj = stabcert::integrate_scalar(&problem, 1e3, 1e-7).unwrap();
        if matches!(traj.status, ScalarStatus::BlowUp { .. }) {
            blow_ups += 1;
        }
    }
    println!("adversarial blow-ups: {blow_ups}/100");
    assert!(blow_ups >= 1, "the oracle must be able to find escapes");
}

/// Forced problems: with a forcing bound small enough for the grid check to
/// pass, dominance still holds on the horizon.
#[test]
fn admissible_forcing_preserves_dominance() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let report = report_times(200.0, 48);
    let mut verified = 0;
    for _ in 0..50 {
        let b0 = 10f64.powf(rng.random_range(-0.5..0.5));
        let d = rng.random_range(0.2..=1.0);
        let p = rng.random_range(1.0..=3.0);
        let c0 = rng.random_range(0.0..=2.0);
        let g0 = rng.random_range(0.1..=1.0);
        let mu0 = default_mu0(g0);
        let bound = PerturbationBound::new(c0, p).unwrap();
        // A feasibility margin leaves room for the forcing term.
        let b1 = 1.25 * search_b1(b0, d, &bound, mu0).unwrap();
        let gamma = GammaModel::power_law(b0, b1, d).unwrap();
        let cert = certify(&gamma, bound, g0, Some(mu0)).unwrap();
        assert!(cert.valid());

        let eps = 0.01;
        let gamma_for_beta = gamma.clone();
        let half_p = 0.5 * p;
        let beta = Coefficient::function(move |t| {
            let g = gamma_for_beta.eval(t).unwrap();
            let integral = gamma_for_beta.integral(t).unwrap();
            eps * g * (-half_p * integral).exp()
        });

        let spec = stabcert::GeneralMuSpec::new(
            stabcert::MuFunction::Canonical { mu0 },
            Coefficient::constant(c0).unwrap(),
            beta.clone(),
            gamma.clone(),
            p,
            200.0,
            8_192,
        )
        .unwrap();
        let verdict = stabcert::verify_general_mu(&spec).unwrap();
        if !verdict.pass {
            continue; // forcing too large for this draw; not a counterexample
        }
        verified += 1;

        let problem =
            ScalarProblem::new(gamma, Coefficient::constant(c0).unwrap(), beta, p, g0).unwrap();
        let traj = integrate_scalar_sampled(&problem, 200.0, 1e-8, &report).unwrap();
        assert_eq!(traj.status, ScalarStatus::Completed);
        let dominance = check_dominance(&traj, &cert).unwrap();
        assert!(
            dominance.pass,
            "forced dominance failed: product {} at {}",
            dominance.max_product, dominance.at
        );
    }
    println!("forcing draws passing the grid check: {verified}/50");
    assert!(verified >= 30, "the forcing scale should usually verify, got {verified}");
}
