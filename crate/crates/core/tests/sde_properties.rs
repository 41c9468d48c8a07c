use std::f64::consts::PI;

use paramp::analytic::{
    correlations_lyapunov_euler, cross_quadrature_stats, measured_drives, pump_phase_for, steady_state_amplitudes,
    MeanAmplitudes,
};
use paramp::estimators::{chi_square_variance_test, sample_variance};
use paramp::model::DEFAULT_MEMBRANE_MASS;
use paramp::sde::{run_ensemble, run_gain_sweep, GainSweepPlan, SimPlan};
use paramp::{ModeParams, SystemConfig};
use proptest::prelude::*;

/// Symmetric membranes with a slow substrate, so Euler–Maruyama steps stay affordable.
fn squeezing_config(mu: f64) -> SystemConfig {
    let m = ModeParams::from_hz(1.5e6, 0.1, DEFAULT_MEMBRANE_MASS).unwrap();
    SystemConfig::demo()
        .with_membranes(m, m)
        .unwrap()
        .with_substrate_gamma(10.0 * m.gamma())
        .unwrap()
        .with_mu(mu)
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn noiseless_steady_state_matches_closed_form(mu in 0.0f64..0.9, phi in 0.0f64..(2.0 * PI)) {
        let c = SystemConfig::demo().with_mu(mu).unwrap();
        let (fi, fj) = measured_drives(&c);
        let sweep = run_gain_sweep(&c, &fi, &fj, &[phi], &GainSweepPlan::default()).unwrap();
        let at = c.with_pump_phase(pump_phase_for(phi, &fi, &fj)).unwrap();
        let (a_i, a_j) = steady_state_amplitudes(&at, &fi, &fj).unwrap();
        prop_assert!((sweep[0].a_i - a_i).norm() <= 1e-8 * a_i.norm());
        prop_assert!((sweep[0].a_j - a_j).norm() <= 1e-8 * a_j.norm());
    }
}

#[test]
fn ensemble_is_independent_of_thread_count() {
    let c = squeezing_config(0.5);
    let plan = SimPlan::euler_for(&c, 20.0, 6, 42);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_ensemble(&c, &plan).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.final_states, b.final_states);
    assert_eq!(a.correlations.c_alpha, b.correlations.c_alpha);
    let other = run_ensemble(
        &c,
        &SimPlan {
            seed: 43,
            ..plan.clone()
        },
    )
    .unwrap();
    assert_ne!(a.final_states, other.final_states);
}

#[test]
fn halving_the_step_stays_within_statistical_error() {
    let c = squeezing_config(0.5);
    let coarse = SimPlan::euler_for(&c, 300.0, 300, 1);
    let fine = SimPlan {
        dt: 0.5 * coarse.dt,
        ..coarse.clone()
    };
    let a = run_ensemble(&c, &coarse).unwrap().cross_quadratures();
    let b = run_ensemble(&c, &fine).unwrap().cross_quadratures();
    for q in 0..4 {
        let se = (a.std_error[q].powi(2) + b.std_error[q].powi(2)).sqrt();
        assert!((a.variance[q] - b.variance[q]).abs() < 3.0 * se, "q = {q}: {a:?} {b:?}");
    }
}

#[test]
fn pumped_final_states_pass_chi_square() {
    let c = squeezing_config(0.5);
    let plan = SimPlan::euler_for(&c, 60.0, 400, 9);
    let result = run_ensemble(&c, &plan).unwrap();
    let mean = MeanAmplitudes::squeezing(&c);
    let model = cross_quadrature_stats(&correlations_lyapunov_euler(&c, &mean, plan.dt).unwrap()).variances();
    let x = result.correlations.x_th;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let quadratures: [Vec<f64>; 4] = [
        result
            .final_states
            .iter()
            .map(|f| s * (f.alpha[0] / x[0] + f.alpha[1] / x[1]))
            .collect(),
        result
            .final_states
            .iter()
            .map(|f| s * (f.alpha[0] / x[0] - f.alpha[1] / x[1]))
            .collect(),
        result
            .final_states
            .iter()
            .map(|f| s * (f.beta[0] / x[0] + f.beta[1] / x[1]))
            .collect(),
        result
            .final_states
            .iter()
            .map(|f| s * (f.beta[0] / x[0] - f.beta[1] / x[1]))
            .collect(),
    ];
    for (q, values) in quadratures.iter().enumerate() {
        let test = chi_square_variance_test(sample_variance(values), model[q], values.len(), 0.99).unwrap();
        assert!(test.consistent, "q = {q}: {test:?}");
    }
}
