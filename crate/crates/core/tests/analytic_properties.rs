use std::f64::consts::PI;

use paramp::analytic::{
    correlations_closed_form, cross_quadrature_stats, linewidth_exact, phase_gain, pump_phase_for,
    steady_state_amplitudes, Drive,
};
use paramp::model::DEFAULT_MEMBRANE_MASS;
use paramp::{ModeParams, SystemConfig};
use proptest::prelude::*;

fn membranes(delta: f64, ratio: f64) -> SystemConfig {
    let g = 2.0 * PI * 0.1;
    let mi = ModeParams::new(2.0 * PI * 1.5e6, g * (1.0 + delta), DEFAULT_MEMBRANE_MASS).unwrap();
    let mj = ModeParams::new(2.0 * PI * 1.5e6 * ratio, g * (1.0 - delta), DEFAULT_MEMBRANE_MASS).unwrap();
    SystemConfig::demo().with_membranes(mi, mj).unwrap()
}

proptest! {
    #[test]
    fn gain_law_matches_steady_state(
        mu in 0.0f64..0.95,
        phi in 0.0f64..(2.0 * PI),
        x_i in 0.0f64..1e-10,
        phase_i in -PI..PI,
        phase_j in -PI..PI,
    ) {
        let base = SystemConfig::demo();
        let chi_i = base.mode_i().susceptibility();
        let chi_j = base.mode_j().susceptibility();
        let fi = Drive::new(x_i / chi_i, phase_i);
        let fj = Drive::new(5e-12 / chi_j, phase_j);
        let c = base.with_mu(mu).unwrap().with_pump_phase(pump_phase_for(phi, &fi, &fj)).unwrap();
        let (_, a_j) = steady_state_amplitudes(&c, &fi, &fj).unwrap();
        let (_, a_j0) = steady_state_amplitudes(&c.with_mu(0.0).unwrap(), &fi, &fj).unwrap();
        let eta = (chi_i / chi_j).sqrt() * fi.magnitude / fj.magnitude;
        let g = phase_gain(mu, eta, phi).unwrap();
        prop_assert!((a_j.norm() / a_j0.norm() / g - 1.0).abs() < 1e-10);
    }

    #[test]
    fn amplified_squeezed_product_is_at_least_one(
        mu in 0.0f64..0.98,
        delta in -0.5f64..0.5,
        ratio in 1.0f64..1.5,
    ) {
        let c = membranes(delta, ratio).with_mu(mu).unwrap();
        let v = cross_quadrature_stats(&correlations_closed_form(&c).unwrap()).variances();
        prop_assert!(v[0] * v[1] >= 1.0 - 1e-12, "{:?}", v);
        prop_assert!(v[3] * v[2] >= 1.0 - 1e-12, "{:?}", v);
    }

    #[test]
    fn beta_cross_term_mirrors_alpha(
        mu in 0.0f64..0.98,
        delta in -0.5f64..0.5,
        ratio in 1.0f64..1.5,
    ) {
        let c = membranes(delta, ratio).with_mu(mu).unwrap();
        let set = correlations_closed_form(&c).unwrap();
        let (a, b) = (set.normalized_alpha()[(0, 1)], set.normalized_beta()[(0, 1)]);
        prop_assert!((a + b).abs() <= 1e-14 * a.abs().max(1.0));
    }

    #[test]
    fn deamplification_is_unbounded(target in 1e-9f64..1.0, mu in 0.01f64..0.99) {
        // choose η so that μη sits just below 1
        let eta = (1.0 - 0.5 * target * (1.0 - mu * mu)) / mu;
        prop_assert!(phase_gain(mu, eta, 0.0).unwrap() < target);
    }

    #[test]
    fn linewidth_is_monotone_and_continuous(
        gamma in 0.01f64..10.0,
        ratio in 1.5f64..1e5,
        xi in 1e-12f64..1e-6,
    ) {
        let gs = gamma * ratio;
        let w = |x: f64| linewidth_exact(gamma, gs, xi, x).gamma;
        let mut last = w(0.0);
        prop_assert!((last - gamma).abs() <= 1e-12 * gamma);
        for k in 1..=240 {
            let next = w(xi * 1.2 * k as f64 / 240.0);
            prop_assert!(next >= last * (1.0 - 1e-14), "k = {}", k);
            last = next;
        }
        let edge = xi * (1.0 - gamma / gs);
        let (below, above) = (w(edge * (1.0 - 1e-12)), w(edge * (1.0 + 1e-12)));
        prop_assert!((above - below).abs() <= 1e-4 * above);
    }
}

#[test]
fn product_equality_only_in_the_symmetric_unpumped_case() {
    let v = |c: SystemConfig| {
        let v = cross_quadrature_stats(&correlations_closed_form(&c).unwrap()).variances();
        v[0] * v[1]
    };
    assert!((v(membranes(0.0, 1.0)) - 1.0).abs() < 1e-14);
    assert!(v(membranes(0.0, 1.0).with_mu(0.1).unwrap()) > 1.0 + 1e-3);
    let mu = 0.6;
    assert!((v(membranes(0.0, 1.0).with_mu(mu).unwrap()) - 1.0 / (1.0 - mu * mu)).abs() < 1e-12);
}
