use nalgebra::{Matrix3, Matrix6, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::analytic::correlations::{solve_lyapunov, thermal_amplitudes};
use crate::analytic::fluctuations::{
    canonical_rotation, diffusion_matrix, drift_matrices, DiffusionMatrix, MeanAmplitudes,
};
use crate::analytic::gain::Complex64;
use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::sde::plan::{Scheme, SimPlan};
use crate::sde::state::FluctuationState;

/// One-step map of a single quadrature sector, `x ← Φ x + b + L ζ`.
#[derive(Debug, Clone, PartialEq)]
struct SectorMap {
    phi: Matrix3<f64>,
    forcing: Vector3<f64>,
    noise: Matrix3<f64>,
    diagonal_noise: bool,
}

impl SectorMap {
    fn euler(m: &Matrix3<f64>, d: &DiffusionMatrix, f: Vector3<f64>, dt: f64) -> Self {
        Self {
            phi: Matrix3::identity() + m * dt,
            forcing: f * dt,
            noise: Matrix3::from_diagonal(&d.0.diagonal().map(|v| (v * dt).sqrt())),
            diagonal_noise: true,
        }
    }

    fn exact(m: &Matrix3<f64>, d: &DiffusionMatrix, x_th: &[f64; 3], f: Vector3<f64>, dt: f64) -> Result<Self> {
        let phi = (m * dt).exp();

        // Γ = ∫₀^Δ e^{Ms} ds from exp([[M, I], [0, 0]] Δ).
        let mut aug = Matrix6::zeros();
        aug.fixed_view_mut::<3, 3>(0, 0).copy_from(&(m * dt));
        aug.fixed_view_mut::<3, 3>(0, 3).copy_from(&(Matrix3::identity() * dt));
        let gamma: Matrix3<f64> = aug.exp().fixed_view::<3, 3>(0, 3).into_owned();

        let stable = m.complex_eigenvalues().iter().all(|e| e.re < 0.0);
        let q = if stable {
            // Q = C∞ − Φ C∞ Φᵀ, exact for a stable drift.
            let c = solve_lyapunov(m, d, x_th, 0.0)?;
            c - phi * c * phi.transpose()
        } else {
            van_loan_noise(m, d, dt)
        };
        let q = 0.5 * (q + q.transpose());
        Ok(Self {
            phi,
            forcing: gamma * f,
            noise: matrix_sqrt(&q, x_th)?,
            diagonal_noise: false,
        })
    }

    #[inline]
    fn apply<R: Rng + ?Sized>(&self, x: &Vector3<f64>, noise_on: bool, rng: &mut R) -> Vector3<f64> {
        let mut next = self.phi * x + self.forcing;
        if noise_on {
            let z = Vector3::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            );
            if self.diagonal_noise {
                next += self.noise.diagonal().component_mul(&z);
            } else {
                next += self.noise * z;
            }
        }
        next
    }
}

/// One-step noise covariance `∫₀^Δ e^{Ms} D e^{Mᵀs} ds` for any drift.
/// Van Loan's block exponential on a substep short enough to avoid
/// overflow, then doubling: `Q(2h) = Q(h) + Φ(h) Q(h) Φ(h)ᵀ`.
fn van_loan_noise(m: &Matrix3<f64>, d: &DiffusionMatrix, dt: f64) -> Matrix3<f64> {
    let norm = m.abs().row_sum().max();
    let mut doublings = 0;
    let mut h = dt;
    while norm * h > 0.5 {
        h *= 0.5;
        doublings += 1;
    }
    // exp([[−M, D], [0, Mᵀ]] h) = [[·, G], [0, Φᵀ]], Q = Φ G.
    let mut vl = Matrix6::zeros();
    vl.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-m * h));
    vl.fixed_view_mut::<3, 3>(0, 3).copy_from(&(d.0 * h));
    vl.fixed_view_mut::<3, 3>(3, 3).copy_from(&(m.transpose() * h));
    let e = vl.exp();
    let g: Matrix3<f64> = e.fixed_view::<3, 3>(0, 3).into_owned();
    let mut phi: Matrix3<f64> = e.fixed_view::<3, 3>(3, 3).transpose();
    let mut q = phi * g;
    for _ in 0..doublings {
        q += phi * q * phi.transpose();
        phi = phi * phi;
    }
    q
}

/// `L` with `L Lᵀ = Q`, computed in thermally scaled units. Falls back to a
/// clipped eigen-decomposition when `Q` is only semidefinite numerically.
fn matrix_sqrt(q: &Matrix3<f64>, x: &[f64; 3]) -> Result<Matrix3<f64>> {
    let scaled = Matrix3::from_fn(|r, c| q[(r, c)] / (x[r] * x[c]));
    let l = match scaled.cholesky() {
        Some(ch) => ch.l(),
        None => {
            let eig = scaled.symmetric_eigen();
            if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
                return Err(Error::Singular("step noise covariance"));
            }
            let root = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
            eig.eigenvectors * Matrix3::from_diagonal(&root)
        }
    };
    Ok(Matrix3::from_fn(|r, c| l[(r, c)] * x[r]))
}

/// Precomputed one-step maps for both sectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Stepper {
    alpha: SectorMap,
    beta: SectorMap,
    noise_on: bool,
    guard: [f64; 3],
    check_guard: bool,
}

impl Stepper {
    pub fn new(config: &SystemConfig, mean: &MeanAmplitudes, plan: &SimPlan) -> Result<Self> {
        let drift = drift_matrices(config, mean);
        let d = diffusion_matrix(config);
        let x_th = thermal_amplitudes(config);
        let (fa, fb) = drive_vectors(config, plan.drives);
        let (alpha, beta) = match plan.scheme {
            Scheme::EulerMaruyama => (
                SectorMap::euler(&drift.m_alpha, &d, fa, plan.dt),
                SectorMap::euler(&drift.m_beta, &d, fb, plan.dt),
            ),
            Scheme::ExactPropagator => (
                SectorMap::exact(&drift.m_alpha, &d, &x_th, fa, plan.dt)?,
                SectorMap::exact(&drift.m_beta, &d, &x_th, fb, plan.dt)?,
            ),
        };
        Ok(Self {
            alpha,
            beta,
            noise_on: plan.noise_on,
            guard: x_th.map(|x| x * plan.blowup_factor),
            check_guard: !plan.allow_above_threshold,
        })
    }

    /// Advances `state` by one step.
    #[inline]
    pub fn advance<R: Rng + ?Sized>(&self, state: &mut FluctuationState, rng: &mut R) {
        let a = self.alpha.apply(&state.alpha_vec(), self.noise_on, rng);
        let b = self.beta.apply(&state.beta_vec(), self.noise_on, rng);
        state.set(&a, &b);
    }

    /// Blow-up check; `None` when within the guard or the guard is disabled.
    pub fn violation(&self, state: &FluctuationState) -> Option<(&'static str, f64, f64)> {
        if !self.check_guard {
            return if state.is_finite() {
                None
            } else {
                state.exceeds(&[f64::INFINITY; 3])
            };
        }
        state.exceeds(&self.guard)
    }
}

/// Deterministic forcing `v = (i/2) γ_k χ_k F̃_k` rotated into the canonical
/// frame, split into α and β parts.
fn drive_vectors(config: &SystemConfig, drives: Option<[Complex64; 3]>) -> (Vector3<f64>, Vector3<f64>) {
    let Some(f) = drives else {
        return (Vector3::zeros(), Vector3::zeros());
    };
    let theta = canonical_rotation(config.pump_phase());
    let modes = [config.mode_i(), config.mode_j(), config.substrate()];
    let rot = [theta, theta, 2.0 * theta];
    let mut a = Vector3::zeros();
    let mut b = Vector3::zeros();
    for k in 0..3 {
        let m = modes[k];
        let v = Complex64::new(0.0, 0.5 * m.gamma() * m.susceptibility()) * f[k] * Complex64::from_polar(1.0, -rot[k]);
        a[k] = v.re;
        b[k] = v.im;
    }
    (a, b)
}

/// Single step of both sectors. Builds the one-step maps on every call; use
/// [`Stepper`] for repeated stepping.
pub fn step<R: Rng + ?Sized>(
    state: &FluctuationState,
    config: &SystemConfig,
    mean: &MeanAmplitudes,
    plan: &SimPlan,
    rng: &mut R,
) -> Result<FluctuationState> {
    plan.validate(config)?;
    let stepper = Stepper::new(config, mean, plan)?;
    let mut next = *state;
    stepper.advance(&mut next, rng);
    if let Some((component, value, guard)) = stepper.violation(&next) {
        return Err(Error::BlowUp {
            trajectory: 0,
            time: plan.dt,
            component,
            value,
            guard,
        });
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::fluctuations::instability_growth_rate;
    use crate::analytic::gain::{steady_state_amplitudes, Drive};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn run(config: &SystemConfig, plan: &SimPlan, start: FluctuationState, steps: usize) -> FluctuationState {
        let stepper = Stepper::new(config, &MeanAmplitudes::squeezing(config), plan).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = start;
        for _ in 0..steps {
            stepper.advance(&mut s, &mut rng);
        }
        s
    }

    #[test]
    fn free_decay_at_half_linewidth() {
        let c = SystemConfig::demo();
        let g = c.mode_i().gamma();
        let t = 2.0 / g;
        let start = FluctuationState {
            alpha: [1e-12, 0.0, 0.0],
            beta: [0.0; 3],
        };
        let exact_plan = SimPlan::new(t / 100.0, t, 1, 0)
            .without_noise()
            .with_scheme(Scheme::ExactPropagator);
        let end = run(&c, &exact_plan, start, 100);
        assert_relative_eq!(end.alpha[0], 1e-12 * (-g * t / 2.0).exp(), max_relative = 1e-12);

        let em_plan = SimPlan::euler_for(&c, t, 1, 0).without_noise();
        let n = em_plan.n_steps();
        let end = run(&c, &em_plan, start, n);
        let expected = 1e-12 * (1.0 - g * em_plan.dt / 2.0).powi(n as i32);
        assert_relative_eq!(end.alpha[0], expected, max_relative = 1e-10);
    }

    #[test]
    fn above_threshold_grows_at_eigen_rate() {
        let c = SystemConfig::demo().with_mu(2.0).unwrap();
        let rate = instability_growth_rate(&c).unwrap();
        let t = 3.0 / rate;
        let plan = SimPlan::new(t / 200.0, t, 1, 0)
            .without_noise()
            .with_scheme(Scheme::ExactPropagator)
            .allowing_above_threshold();
        let start = FluctuationState {
            alpha: [1e-12, 1e-12, 0.0],
            beta: [0.0; 3],
        };
        let s1 = run(&c, &plan, start, 200);
        let s2 = run(&c, &plan, s1, 200);
        let n1 = (s1.alpha[0].powi(2) + s1.alpha[1].powi(2)).sqrt();
        let n2 = (s2.alpha[0].powi(2) + s2.alpha[1].powi(2)).sqrt();
        assert_relative_eq!((n2 / n1).ln() / t, rate, max_relative = 1e-3);
    }

    #[test]
    fn guard_reports_blow_up() {
        let c = SystemConfig::demo().with_mu(2.0).unwrap();
        let plan = SimPlan::new(1.0, 1.0, 1, 0)
            .without_noise()
            .with_scheme(Scheme::ExactPropagator);
        let x = c.mode_i().thermal_amplitude(c.temperature());
        let start = FluctuationState {
            alpha: [0.9e6 * x, 0.9e6 * x, 0.0],
            beta: [0.0; 3],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = step(&start, &c, &MeanAmplitudes::squeezing(&c), &plan, &mut rng).unwrap_err();
        assert!(
            matches!(
                err,
                Error::BlowUp {
                    component: "alpha_i" | "alpha_j",
                    ..
                }
            ),
            "{err:?}"
        );
    }

    #[test]
    fn driven_fixed_point_matches_steady_state() {
        let c = SystemConfig::demo().with_mu(0.3).unwrap().with_pump_phase(0.4).unwrap();
        let fi = Drive::new(2e-16, 0.7);
        let fj = Drive::new(1e-16, -0.2);
        let (a_i, a_j) = steady_state_amplitudes(&c, &fi, &fj).unwrap();
        let t = 400.0 / c.mode_j().gamma();
        let plan = SimPlan::new(t / 400.0, t, 1, 0)
            .without_noise()
            .with_scheme(Scheme::ExactPropagator)
            .with_drives([fi.as_complex(), fj.as_complex(), Complex64::new(0.0, 0.0)]);
        let end = run(&c, &plan, FluctuationState::zero(), 400);
        let theta = canonical_rotation(c.pump_phase());
        let back = |k: usize| end.complex(k) * Complex64::from_polar(1.0, theta);
        assert_relative_eq!((back(0) - a_i).norm() / a_i.norm(), 0.0, epsilon = 1e-8);
        assert_relative_eq!((back(1) - a_j).norm() / a_j.norm(), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn exact_noise_covariance_matches_euler_for_small_steps() {
        let c = SystemConfig::demo();
        let mean = MeanAmplitudes::squeezing(&c);
        let d = diffusion_matrix(&c);
        let dt = 1e-3 / c.substrate().gamma();
        let x = thermal_amplitudes(&c);
        let m = drift_matrices(&c, &mean).m_alpha;
        let exact = SectorMap::exact(&m, &d, &x, Vector3::zeros(), dt).unwrap();
        let q = exact.noise * exact.noise.transpose();
        for k in 0..3 {
            assert_relative_eq!(q[(k, k)], d.0[(k, k)] * dt, max_relative = 2e-3);
        }
    }
}
