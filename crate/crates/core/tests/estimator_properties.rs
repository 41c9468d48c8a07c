use std::f64::consts::{FRAC_PI_4, PI};

use paramp::analytic::{
    correlations_closed_form, cross_quadrature_stats, linewidth_exact, nonlinear_linewidth, phase_gain,
};
use paramp::estimators::{
    fit_dissipation_curve, fit_gain_curve, fit_ringdown_log, gain_curve, phase_space_summary, quadrature_histogram,
    xi_vs_threshold_regression, Branch, DissipationModel, GainFitOptions,
};
use paramp::model::{threshold, xi_scale, xi_scale_for, DEFAULT_MEMBRANE_MASS};
use paramp::sde::{phase_grid, run_ensemble, run_ringdown_with, trajectory_rng, RingdownPlan, Scheme, SimPlan};
use paramp::{Membrane, ModeParams, SystemConfig};
use proptest::prelude::*;
use rand_distr::{Distribution, Normal};

proptest! {
    #[test]
    fn gain_round_trip(mu in 0.01f64..0.9, eta in 0.1f64..30.0) {
        let phi = phase_grid(24);
        let g = gain_curve(mu, eta, 0.0, &phi);
        let branch = if mu * eta > 1.0 { Branch::Above } else { Branch::Below };
        let f = fit_gain_curve(&phi, &g, &GainFitOptions::free_eta(branch)).unwrap();
        prop_assert!(f.converged, "{}", f.message);
        prop_assert!((f.value("mu") / mu - 1.0).abs() < 1e-3, "mu {}", f.value("mu"));
        prop_assert!((f.value("eta") / eta - 1.0).abs() < 1e-3, "eta {}", f.value("eta"));
    }

    #[test]
    fn gain_fit_absorbs_a_global_phase_offset(mu in 0.02f64..0.9, eta in 0.2f64..5.0, shift in -PI..PI) {
        let phi = phase_grid(16);
        let g = gain_curve(mu, eta, 0.0, &phi);
        let shifted: Vec<f64> = phi.iter().map(|p| p + shift).collect();
        let opts = GainFitOptions::fixed_eta(eta).with_phase_offset();
        let a = fit_gain_curve(&phi, &g, &opts).unwrap();
        let b = fit_gain_curve(&shifted, &g, &opts).unwrap();
        prop_assert!(a.converged && b.converged);
        prop_assert!((a.value("mu") - b.value("mu")).abs() < 1e-8 * mu);
        let d = (a.value("phi0") - b.value("phi0") - shift).rem_euclid(2.0 * PI);
        prop_assert!(d.min(2.0 * PI - d) < 1e-7, "offset difference {}", d);
    }

    #[test]
    fn dissipation_round_trip(gamma in 0.05f64..5.0, ratio in 10.0f64..1e5, xi in 1e-12f64..1e-8) {
        let gs = gamma * ratio;
        let x: Vec<f64> = (0..10).map(|k| xi * 1.1 * k as f64 / 9.0).collect();
        let q: Vec<f64> = x.iter().map(|&x| gamma / linewidth_exact(gamma, gs, xi, x).gamma).collect();
        let f = fit_dissipation_curve(&x, &q, gamma, DissipationModel::Exact).unwrap();
        prop_assert!(f.converged, "{}", f.message);
        prop_assert!((f.value("xi") / xi - 1.0).abs() < 1e-3);
        prop_assert!((f.value("gamma_s") / gs - 1.0).abs() < 1e-3);
    }

    #[test]
    fn histogram_mass_is_the_sample_count(points in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..400), bins in 1usize..50) {
        let h = quadrature_histogram(&points, bins).unwrap();
        prop_assert_eq!(h.total as usize, points.len());
        prop_assert_eq!(h.counts.iter().sum::<u64>() as usize, points.len());
    }
}

#[test]
fn ringdown_fit_matches_linewidth_at_half_xi() {
    let c = SystemConfig::demo();
    let x = 0.5 * xi_scale_for(&c, Membrane::J).unwrap();
    let plan = RingdownPlan::for_hold(&c, Membrane::J, x).unwrap();
    let rec = run_ringdown_with(&c, Membrane::J, x, 1e-12, &plan).unwrap();
    let fit = fit_ringdown_log(&rec.times, &rec.log_envelope).unwrap();
    let expected = nonlinear_linewidth(&c, x).unwrap().gamma;
    assert!(fit.converged);
    assert!((fit.value("gamma_eff") / expected - 1.0).abs() < 0.01);
}

/// Simulated Q(x)/Q₀ sweep for `damped`, fitted with the two-mode model.
fn simulated_xi(c: &SystemConfig, damped: Membrane) -> f64 {
    let xi = xi_scale_for(c, damped).unwrap();
    let gamma = c.membrane(damped).gamma();
    let x: Vec<f64> = (0..8).map(|k| xi * k as f64 / 8.0).collect();
    let q: Vec<f64> = x
        .iter()
        .map(|&x| {
            let plan = RingdownPlan::for_hold(c, damped, x).unwrap();
            let rec = run_ringdown_with(c, damped, x, 1e-12, &plan).unwrap();
            gamma
                / fit_ringdown_log(&rec.times, &rec.log_envelope)
                    .unwrap()
                    .value("gamma_eff")
        })
        .collect();
    let f = fit_dissipation_curve(&x, &q, gamma, DissipationModel::Exact).unwrap();
    assert!(f.converged, "{}", f.message);
    f.value("xi")
}

#[test]
fn ringdown_sweep_recovers_distinct_xi_per_mode() {
    let c = SystemConfig::demo();
    let xi_j = simulated_xi(&c, Membrane::J);
    let xi_i = simulated_xi(&c, Membrane::I);
    let (ej, ei) = (
        xi_scale_for(&c, Membrane::J).unwrap(),
        xi_scale_for(&c, Membrane::I).unwrap(),
    );
    assert!((xi_j / ej - 1.0).abs() < 0.02, "{xi_j} vs {ej}");
    assert!((xi_i / ei - 1.0).abs() < 0.02, "{xi_i} vs {ei}");
    // ξ_i/ξ_j = √(ω_i/ω_j) here, a 6% separation
    assert!((xi_i / xi_j - (ei / ej)).abs() < 0.02 * ei / ej);
    assert!((xi_i / xi_j - 1.0).abs() > 0.04);
}

#[test]
fn approximate_model_fit_agrees_when_substrate_is_fast() {
    let (gamma, xi) = (0.15, 2e-9);
    let gs = 1e3 * gamma;
    let x: Vec<f64> = (0..10).map(|k| xi * k as f64 / 9.0).collect();
    let q: Vec<f64> = x
        .iter()
        .map(|&x| gamma / linewidth_exact(gamma, gs, xi, x).gamma)
        .collect();
    let exact = fit_dissipation_curve(&x, &q, gamma, DissipationModel::Exact).unwrap();
    let approx = fit_dissipation_curve(&x, &q, gamma, DissipationModel::Approx).unwrap();
    assert!(approx.converged, "{}", approx.message);
    assert!((approx.value("xi") / exact.value("xi") - 1.0).abs() < 0.01);
}

#[test]
fn unpumped_gain_data_gives_mu_consistent_with_zero() {
    let phi = phase_grid(20);
    let noise = Normal::new(0.0, 0.02).unwrap();
    let mut rng = trajectory_rng(17, 0);
    let g: Vec<f64> = phi
        .iter()
        .map(|&p| phase_gain(0.0, 24.0, p).unwrap() * (1.0 + noise.sample(&mut rng)))
        .collect();
    let f = fit_gain_curve(&phi, &g, &GainFitOptions::fixed_eta(24.0)).unwrap();
    assert!(f.converged, "{}", f.message);
    assert!(
        f.value("mu").abs() <= 3.0 * f.std_error("mu"),
        "{} ± {}",
        f.value("mu"),
        f.std_error("mu")
    );
}

#[test]
fn xi_regression_tolerates_five_percent_noise() {
    let base = SystemConfig::demo();
    let clean: Vec<(f64, f64)> = (0..10)
        .map(|k| {
            let c = base
                .with_coupling(base.g() * 10f64.powf(-1.5 + k as f64 / 3.0))
                .unwrap();
            (threshold(&c).unwrap(), xi_scale(&c).unwrap())
        })
        .collect();
    let slope = xi_vs_threshold_regression(&clean, None).unwrap().value("slope");
    let noise = Normal::new(0.0, 0.05).unwrap();
    let mut within = 0;
    for draw in 0..100 {
        let mut rng = trajectory_rng(5, draw);
        let noisy: Vec<(f64, f64)> = clean
            .iter()
            .map(|&(x, y)| (x, y * (1.0 + noise.sample(&mut rng))))
            .collect();
        let s = xi_vs_threshold_regression(&noisy, None).unwrap().value("slope");
        within += ((s / slope - 1.0).abs() < 0.1) as usize;
    }
    assert!(within >= 95, "{within}");
}

fn symmetric(mu: f64) -> SystemConfig {
    let m = ModeParams::from_hz(1.5e6, 0.1, DEFAULT_MEMBRANE_MASS).unwrap();
    SystemConfig::demo()
        .with_membranes(m, m)
        .unwrap()
        .with_substrate_gamma(10.0 * m.gamma())
        .unwrap()
        .with_mu(mu)
        .unwrap()
}

fn summary(mu: f64) -> paramp::estimators::PhaseSpaceSummary {
    let c = symmetric(mu);
    let dt = 0.5 / c.mode_i().gamma();
    let plan = SimPlan::new(dt, 100.0, 4000, 21).with_scheme(Scheme::ExactPropagator);
    let r = run_ensemble(&c, &plan).unwrap();
    phase_space_summary(&r.final_states, &r.correlations.x_th, 40).unwrap()
}

#[test]
fn phase_space_ellipse_follows_pump() {
    let s0 = summary(0.0);
    assert!((s0.alpha_axes.ratio() - 1.0).abs() < 0.08, "{:?}", s0.alpha_axes);

    let mu = 0.5;
    let s = summary(mu);
    let expected = ((1.0 + mu) / (1.0 - mu)).sqrt();
    assert!(
        (s.alpha_axes.ratio() / expected - 1.0).abs() < 0.05,
        "{:?}",
        s.alpha_axes
    );
    assert!((s.alpha_axes.angle - FRAC_PI_4).abs() < 0.05, "{:?}", s.alpha_axes);
    assert!((s.beta_axes.angle + FRAC_PI_4).abs() < 0.05, "{:?}", s.beta_axes);

    // squeezed x_b, y_a shrink and amplified x_a, y_b grow with the pump
    let model = cross_quadrature_stats(&correlations_closed_form(&symmetric(mu)).unwrap());
    let [xa, xb, ya, yb] = s.cross_std;
    assert!(xb < s0.cross_std[1] && ya < s0.cross_std[2]);
    assert!(xa > s0.cross_std[0] && yb > s0.cross_std[3]);
    for (sim, exact) in [
        (xa, model.std_xa),
        (xb, model.std_xb),
        (ya, model.std_ya),
        (yb, model.std_yb),
    ] {
        assert!((sim / exact - 1.0).abs() < 0.05, "{sim} vs {exact}");
    }
}
