//! Noise-free slow-amplitude equations of the three modes,
//!
//! ```text
//! 2Ȧ_i = γ_i [−A_i + iχ_i (g/2 A_j* A_S + F̃_i)]
//! 2Ȧ_j = γ_j [−A_j + iχ_j (g/2 A_i* A_S + F̃_j)]
//! 2Ȧ_S = γ_S [−A_S + iχ_S (g/2 A_i A_j + F̃_S)]
//! ```
//!
//! with the option of holding any amplitude fixed.

use serde::Serialize;

use crate::analytic::gain::Complex64;
use crate::model::SystemConfig;

/// How a mode is treated during integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ModeDrive {
    /// Evolves under the given slowly varying force, N.
    Free(Complex64),
    /// Amplitude is clamped to the given value, m.
    Held(Complex64),
}

impl ModeDrive {
    pub fn undriven() -> Self {
        ModeDrive::Free(Complex64::new(0.0, 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Method {
    Euler,
    Rk4,
}

/// Right-hand side of the amplitude equations for a fixed configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeModeSystem {
    half_gamma: [f64; 3],
    chi: [f64; 3],
    half_g: f64,
    drives: [ModeDrive; 3],
}

pub type Amplitudes = [Complex64; 3];

impl ThreeModeSystem {
    pub fn new(config: &SystemConfig, drives: [ModeDrive; 3]) -> Self {
        let modes = [config.mode_i(), config.mode_j(), config.substrate()];
        Self {
            half_gamma: modes.map(|m| 0.5 * m.gamma()),
            chi: modes.map(|m| m.susceptibility()),
            half_g: 0.5 * config.g(),
            drives,
        }
    }

    /// Initial state with held amplitudes applied.
    pub fn initial(&self, mut a: Amplitudes) -> Amplitudes {
        self.clamp(&mut a);
        a
    }

    fn clamp(&self, a: &mut Amplitudes) {
        for (k, d) in self.drives.iter().enumerate() {
            if let ModeDrive::Held(v) = d {
                a[k] = *v;
            }
        }
    }

    pub fn derivative(&self, a: &Amplitudes) -> Amplitudes {
        let i = Complex64::i();
        let mix = [a[1].conj() * a[2], a[0].conj() * a[2], a[0] * a[1]];
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for k in 0..3 {
            out[k] = match self.drives[k] {
                ModeDrive::Held(_) => Complex64::new(0.0, 0.0),
                ModeDrive::Free(f) => self.half_gamma[k] * (-a[k] + i * self.chi[k] * (self.half_g * mix[k] + f)),
            };
        }
        out
    }

    pub fn step(&self, a: &mut Amplitudes, dt: f64, method: Method) {
        match method {
            Method::Euler => {
                let k1 = self.derivative(a);
                for n in 0..3 {
                    a[n] += k1[n] * dt;
                }
            }
            Method::Rk4 => {
                let shifted =
                    |a: &Amplitudes, k: &Amplitudes, h: f64| [a[0] + k[0] * h, a[1] + k[1] * h, a[2] + k[2] * h];
                let k1 = self.derivative(a);
                let k2 = self.derivative(&shifted(a, &k1, 0.5 * dt));
                let k3 = self.derivative(&shifted(a, &k2, 0.5 * dt));
                let k4 = self.derivative(&shifted(a, &k3, dt));
                for n in 0..3 {
                    a[n] += (k1[n] + 2.0 * k2[n] + 2.0 * k3[n] + k4[n]) * (dt / 6.0);
                }
            }
        }
        self.clamp(a);
    }
}
