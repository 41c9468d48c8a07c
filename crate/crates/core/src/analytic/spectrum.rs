//! Stationary fluctuation spectra of the two quadrature sectors.

use std::f64::consts::PI;

use nalgebra::Matrix3;

use crate::analytic::fluctuations::{diffusion_matrix, drift_matrices, DiffusionMatrix, DriftMatrices, MeanAmplitudes};
use crate::analytic::gain::Complex64;
use crate::error::{Error, Result};
use crate::model::SystemConfig;

pub type SpectralMatrix = Matrix3<Complex64>;

/// Spectral density matrices `S_α(ω)`, `S_β(ω)`, m²·s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPair {
    pub alpha: SpectralMatrix,
    pub beta: SpectralMatrix,
}

/// `S(ω) = (1/2π) (M + iω)⁻¹ D (Mᵀ − iω)⁻¹` for both sectors.
pub fn spectrum(config: &SystemConfig, mean: &MeanAmplitudes, omega: f64) -> Result<SpectrumPair> {
    let drift = drift_matrices(config, mean);
    ensure_stable(&drift)?;
    let diffusion = diffusion_matrix(config);
    Ok(SpectrumPair {
        alpha: sector_spectrum(&drift.m_alpha, &diffusion, omega),
        beta: sector_spectrum(&drift.m_beta, &diffusion, omega),
    })
}

pub(crate) fn ensure_stable(drift: &DriftMatrices) -> Result<()> {
    let rate = drift.max_growth_rate();
    if rate >= 0.0 || !rate.is_finite() {
        return Err(Error::Unstable { growth_rate: rate });
    }
    Ok(())
}

pub(crate) fn sector_spectrum(m: &Matrix3<f64>, d: &DiffusionMatrix, omega: f64) -> SpectralMatrix {
    let h = transfer(m, omega);
    let dc = d.0.map(|v| Complex64::new(v, 0.0));
    (h * dc * h.adjoint()).unscale(2.0 * PI)
}

fn transfer(m: &Matrix3<f64>, omega: f64) -> SpectralMatrix {
    let a = m.map(|v| Complex64::new(v, 0.0)) + SpectralMatrix::identity() * Complex64::new(0.0, omega);
    // M is Hurwitz, so M + iω is never singular for real ω.
    a.try_inverse().expect("M + i omega is invertible for a stable drift")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unpumped_spectrum_is_lorentzian() {
        let c = SystemConfig::demo();
        let mean = MeanAmplitudes::squeezing(&c);
        let d = diffusion_matrix(&c).diagonal();
        let g = c.mode_i().gamma();
        for w in [0.0, 0.1 * g, g, 7.0 * g] {
            let s = spectrum(&c, &mean, w).unwrap();
            let expected = d[0] / (2.0 * PI * (w * w + g * g / 4.0));
            assert_relative_eq!(s.alpha[(0, 0)].re, expected, max_relative = 1e-12);
            assert!(s.alpha[(0, 0)].im.abs() < 1e-12 * expected);
            assert!(s.alpha[(0, 1)].norm() < 1e-12 * expected);
        }
    }

    #[test]
    fn hermitian_and_reflection_symmetric() {
        let c = SystemConfig::demo().with_mu(0.6).unwrap();
        let mean = MeanAmplitudes {
            i: 3e-12,
            j: 1e-12,
            s: c.pump_amplitude(),
        };
        let w = 0.37;
        let plus = spectrum(&c, &mean, w).unwrap();
        let minus = spectrum(&c, &mean, -w).unwrap();
        for (p, m) in [(plus.alpha, minus.alpha), (plus.beta, minus.beta)] {
            let scale = p.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!((p - p.adjoint()).iter().all(|z| z.norm() < 1e-12 * scale));
            assert!((m - p.transpose()).iter().all(|z| z.norm() < 1e-12 * scale));
            // positive semidefinite: real diagonal ≥ 0
            for k in 0..3 {
                assert!(p[(k, k)].re >= 0.0);
            }
        }
    }

    #[test]
    fn rejects_unstable() {
        let c = SystemConfig::demo().with_mu(1.2).unwrap();
        let err = spectrum(&c, &MeanAmplitudes::squeezing(&c), 0.0).unwrap_err();
        assert!(matches!(err, Error::Unstable { .. }));
        assert!(err.to_string().starts_with("unstable, no stationary spectrum"));
    }
}
