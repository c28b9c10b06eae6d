//! Feasibility-search and condition-chain properties over random parameter
//! draws.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stabcert::certificate::{default_mu0, GeneralMuSpec, MuFunction};
use stabcert::{certify, search_b1, verify_general_mu, Coefficient, GammaModel, PerturbationBound};

fn draw_bound(rng: &mut ChaCha8Rng, c0_min: f64) -> PerturbationBound {
    let c0 = rng.random_range(c0_min..=5.0);
    let p = rng.random_range(0.2..=3.0);
    PerturbationBound::new(c0, p).unwrap()
}

/// Every right-hand side of the branch conditions increases with b1, so a
/// passing certificate keeps passing at any larger b1.
#[test]
fn feasibility_is_upward_closed_in_b1() {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let mut passing = 0;
    for _ in 0..300 {
        let b0 = 10f64.powf(rng.random_range(-1.0..1.0));
        let d = rng.random_range(0.05..=1.0);
        let bound = draw_bound(&mut rng, 0.0);
        let g0 = rng.random_range(0.05..=2.0);
        let mu0 = default_mu0(g0);
        let b1 = 10f64.powf(rng.random_range(-2.0..2.0));
        let cert =
            certify(&GammaModel::power_law(b0, b1, d).unwrap(), bound, g0, Some(mu0)).unwrap();
        if cert.valid() {
            passing += 1;
            for factor in [1.0 + 1e-9, 2.0, 100.0] {
                let bigger = certify(
                    &GammaModel::power_law(b0, b1 * factor, d).unwrap(),
                    bound,
                    g0,
                    Some(mu0),
                )
                .unwrap();
                assert!(bigger.valid(), "upward closure violated at factor {factor}");
            }
        }
    }
    assert!(passing > 20, "draw ranges should produce some passing instances, got {passing}");
}

/// The search result is minimal: shrinking it by a relative 1e-6 must fail
/// the branch conditions (away from degenerate tiny minima).
#[test]
fn search_b1_is_minimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(72);
    let mut tested = 0;
    for _ in 0..300 {
        let b0 = 10f64.powf(rng.random_range(-1.0..1.0));
        let d = rng.random_range(0.05..=1.0);
        let bound = draw_bound(&mut rng, 0.5);
        let g0 = rng.random_range(0.05..=1.5);
        let mu0 = default_mu0(g0);
        let b1 = search_b1(b0, d, &bound, mu0).unwrap();
        let cert =
            certify(&GammaModel::power_law(b0, b1, d).unwrap(), bound, g0, Some(mu0)).unwrap();
        assert!(cert.valid(), "search result must certify");
        if b1 < 1e-2 {
            continue; // bisection tolerance comparable to the value itself
        }
        tested += 1;
        let shrunk = b1 * (1.0 - 1e-6);
        let cert = certify(
            &GammaModel::power_law(b0, shrunk, d).unwrap(),
            bound,
            g0,
            Some(mu0),
        )
        .unwrap();
        assert!(
            !cert.valid(),
            "shrunken b1 = {shrunk} still certifies (b0={b0}, d={d}, c0={}, p={}, mu0={mu0})",
            bound.c0(),
            bound.p()
        );
    }
    assert!(tested > 250, "most draws should exercise minimality, got {tested}");
}

/// The closed-form chain is sufficient for the grid-checked inequality: a
/// closed-form pass must imply a grid pass on [0, 1e4]. The converse may
/// fail (the chain is conservative); disagreements in that direction are
/// counted but allowed.
#[test]
fn closed_form_verdict_implies_grid_verdict() {
    let mut rng = ChaCha8Rng::seed_from_u64(73);
    let mut closed_pass = 0;
    let mut grid_only = 0;
    for _ in 0..200 {
        let b0 = 10f64.powf(rng.random_range(-1.0..1.0));
        let d = rng.random_range(0.05..0.999);
        let bound = draw_bound(&mut rng, 0.0);
        let g0 = rng.random_range(0.05..=1.5);
        let mu0 = default_mu0(g0);
        // Half the draws use the minimal feasible b1 (boundary-tight), half a
        // random one (mostly infeasible).
        let b1 = if rng.random_bool(0.5) {
            search_b1(b0, d, &bound, mu0).unwrap()
        } else {
            10f64.powf(rng.random_range(-2.0..2.0))
        };
        let gamma = GammaModel::power_law(b0, b1, d).unwrap();
        let cert = certify(&gamma, bound, g0, Some(mu0)).unwrap();

        let spec = GeneralMuSpec::new(
            MuFunction::Canonical { mu0 },
            Coefficient::constant(bound.c0()).unwrap(),
            Coefficient::Zero,
            gamma.clone(),
            bound.p(),
            1e4,
            20_000,
        )
        .unwrap();
        let report = verify_general_mu(&spec).unwrap();

        // Strip the initial-data check: the grid inequality does not see g0.
        let closed_form_pass = cert
            .checks()
            .iter()
            .filter(|c| !matches!(c.id, stabcert::ConditionId::Mu0Strict))
            .all(|c| c.pass);
        if closed_form_pass {
            closed_pass += 1;
            assert!(
                report.pass,
                "closed-form pass must imply grid pass: b0={b0}, b1={b1}, d={d}, c0={}, p={}, worst margin {} at t={}",
                bound.c0(),
                bound.p(),
                report.margin,
                report.worst_t
            );
        } else if report.pass {
            grid_only += 1;
        }
    }
    println!(
        "closed-form passes: {closed_pass}; grid-pass-only (conservative chain): {grid_only}"
    );
    assert!(closed_pass > 40, "draws should produce closed-form passes, got {closed_pass}");
}

/// The grid check extends the certificate beyond power laws: a tabulated rate
/// sampled from a certified power law verifies on its grid.
#[test]
fn tabulated_rate_certifies_through_the_grid_check() {
    let exact = GammaModel::power_law(1.0, 4.0, 0.5).unwrap();
    let horizon = 100.0;
    let n = 4_001;
    let grid: Vec<f64> = (0..n).map(|i| horizon * i as f64 / (n - 1) as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&t| exact.eval(t).unwrap()).collect();
    let tabulated = GammaModel::tabulated(grid, values).unwrap();

    let spec = GeneralMuSpec::new(
        MuFunction::Canonical { mu0: 1.0 },
        Coefficient::constant(1.0).unwrap(),
        Coefficient::Zero,
        tabulated,
        1.0,
        horizon,
        8_192,
    )
    .unwrap();
    let report = verify_general_mu(&spec).unwrap();
    assert!(report.pass, "margin {} at {}", report.margin, report.worst_t);

    let cert = stabcert::certify_general(&spec, 0.5).unwrap();
    assert!(cert.valid());
    assert_eq!(cert.branch(), stabcert::CertificateBranch::GeneralMu);
    // Finite data cannot certify decay to zero.
    assert_eq!(cert.regime(), stabcert::Regime::StabilityOnly);
}
