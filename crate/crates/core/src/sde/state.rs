use nalgebra::Vector3;
use serde::Serialize;

use crate::analytic::gain::Complex64;

/// Quadrature fluctuations of the three slow amplitudes in the canonical
/// pump frame, m. Index 0, 1, 2 = mode i, mode j, substrate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct FluctuationState {
    pub alpha: [f64; 3],
    pub beta: [f64; 3],
}

pub(crate) const COMPONENT_NAMES: [&str; 6] = ["alpha_i", "beta_i", "alpha_j", "beta_j", "alpha_S", "beta_S"];

impl FluctuationState {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_complex(amplitudes: [Complex64; 3]) -> Self {
        Self {
            alpha: amplitudes.map(|a| a.re),
            beta: amplitudes.map(|a| a.im),
        }
    }

    /// `δA_k = δα_k + i δβ_k`.
    pub fn complex(&self, k: usize) -> Complex64 {
        Complex64::new(self.alpha[k], self.beta[k])
    }

    /// Components in the order (α_i, β_i, α_j, β_j, α_S, β_S).
    pub fn components(&self) -> [f64; 6] {
        [
            self.alpha[0],
            self.beta[0],
            self.alpha[1],
            self.beta[1],
            self.alpha[2],
            self.beta[2],
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.alpha.iter().chain(&self.beta).all(|v| v.is_finite())
    }

    pub(crate) fn alpha_vec(&self) -> Vector3<f64> {
        Vector3::from(self.alpha)
    }

    pub(crate) fn beta_vec(&self) -> Vector3<f64> {
        Vector3::from(self.beta)
    }

    pub(crate) fn set(&mut self, alpha: &Vector3<f64>, beta: &Vector3<f64>) {
        self.alpha = [alpha[0], alpha[1], alpha[2]];
        self.beta = [beta[0], beta[1], beta[2]];
    }

    /// First component whose magnitude exceeds `limit[k]`, as
    /// `(name, value, limit)`.
    pub(crate) fn exceeds(&self, limit: &[f64; 3]) -> Option<(&'static str, f64, f64)> {
        for (k, &lim) in limit.iter().enumerate() {
            for (idx, v) in [(2 * k, self.alpha[k]), (2 * k + 1, self.beta[k])] {
                if !(v.abs() <= lim) {
                    return Some((COMPONENT_NAMES[idx], v, lim));
                }
            }
        }
        None
    }
}
