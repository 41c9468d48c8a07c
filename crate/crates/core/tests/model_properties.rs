use paramp::model::{threshold, xi_scale, DerivedQuantities, DEFAULT_MEMBRANE_MASS};
use paramp::{ModeParams, SystemConfig};
use proptest::prelude::*;

fn config(fi: f64, fj: f64, qi: f64, qj: f64, gs_hz: f64) -> SystemConfig {
    let mi = ModeParams::from_q(fi, qi, DEFAULT_MEMBRANE_MASS).unwrap();
    let mj = ModeParams::from_q(fj, qj, 3.0 * DEFAULT_MEMBRANE_MASS).unwrap();
    SystemConfig::demo()
        .with_membranes(mi, mj)
        .unwrap()
        .with_substrate_gamma(2.0 * std::f64::consts::PI * gs_hz)
        .unwrap()
}

proptest! {
    #[test]
    fn threshold_is_symmetric_in_the_membranes(
        fi in 1e5f64..1e7,
        fj in 1e5f64..1e7,
        qi in 1e4f64..1e8,
        qj in 1e4f64..1e8,
    ) {
        let c = config(fi, fj, qi, qj, 300.0);
        let swapped = c.with_membranes(*c.mode_j(), *c.mode_i()).unwrap();
        let (a, b) = (threshold(&c).unwrap(), threshold(&swapped).unwrap());
        prop_assert!((a / b - 1.0).abs() < 1e-14);
    }

    #[test]
    fn xi_over_threshold_does_not_depend_on_g(
        qi in 1e4f64..1e8,
        gs_hz in 1.0f64..1e4,
        scale in 1e-3f64..1e3,
    ) {
        let c = config(1.5e6, 1.7e6, qi, 4e7, gs_hz);
        let d = c.with_coupling(c.g() * scale).unwrap();
        let ratio = |c: &SystemConfig| xi_scale(c).unwrap() / threshold(c).unwrap();
        prop_assert!((ratio(&c) / ratio(&d) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn derived_quantities_are_pure(mu in 0.0f64..0.99, qi in 1e5f64..1e8) {
        let c = config(1.5e6, 1.7e6, qi, 6.8e7, 320.0).with_mu(mu).unwrap();
        let a = DerivedQuantities::compute(&c).unwrap();
        let b = DerivedQuantities::compute(&c.clone()).unwrap();
        prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}

#[test]
fn default_thermal_amplitudes_are_sub_picometre() {
    let c = SystemConfig::demo();
    for m in [c.mode_i(), c.mode_j()] {
        let x = m.thermal_amplitude(c.temperature());
        assert!((0.1e-12..=0.2e-12).contains(&x), "{x}");
    }
}
