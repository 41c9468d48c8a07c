//! Two-mode dissipation: the linewidth of one membrane mode while its
//! partner is held at a large amplitude and up-converts energy into the
//! substrate.

use serde::Serialize;

use crate::error::Result;
use crate::model::{xi_scale_for, Membrane, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Linewidth {
    /// Energy decay rate, rad/s.
    pub gamma: f64,
    /// The exchange with the substrate is oscillatory; `gamma` is the
    /// envelope rate `(γ_S + γ)/2`.
    pub overcoupled: bool,
}

/// `γ(x) = ½[γ_S + γ − sqrt((γ_S − γ)² − γ_S² x²/ξ²)]`, saturating at
/// `(γ_S + γ)/2` where the radicand turns negative.
pub fn linewidth_exact(gamma: f64, gamma_s: f64, xi: f64, x: f64) -> Linewidth {
    let r = x / xi;
    let radicand = (gamma_s - gamma).powi(2) - gamma_s * gamma_s * r * r;
    if radicand < 0.0 {
        Linewidth {
            gamma: 0.5 * (gamma_s + gamma),
            overcoupled: true,
        }
    } else {
        // γ_S + γ − sqrt(·) = 2γ + (γ_S − γ − sqrt(·)); the bracket is
        // evaluated through its conjugate to avoid cancellation at small x.
        let root = radicand.sqrt();
        let base = gamma_s - gamma;
        let excess = if base > 0.0 {
            gamma_s * gamma_s * r * r / (base + root)
        } else {
            base - root
        };
        Linewidth {
            gamma: 0.5 * (2.0 * gamma + excess),
            overcoupled: false,
        }
    }
}

/// `γ(x) ≈ (γ_S/2)[1 + 2γ/γ_S − sqrt(1 − x²/ξ²)]`, valid for `γ ≪ γ_S`.
/// Beyond `x = ξ` the root is dropped.
pub fn linewidth_approx(gamma: f64, gamma_s: f64, xi: f64, x: f64) -> f64 {
    let r = x / xi;
    0.5 * gamma_s * (1.0 + 2.0 * gamma / gamma_s - (1.0 - r * r).max(0.0).sqrt())
}

/// Linewidth of mode j while mode i is held at amplitude `x_i` (m).
pub fn nonlinear_linewidth(config: &SystemConfig, x_i: f64) -> Result<Linewidth> {
    nonlinear_linewidth_for(config, Membrane::J, x_i)
}

/// Linewidth of `damped` while its partner is held at `x_partner` (m).
pub fn nonlinear_linewidth_for(config: &SystemConfig, damped: Membrane, x_partner: f64) -> Result<Linewidth> {
    let xi = xi_scale_for(config, damped)?;
    Ok(linewidth_exact(
        config.membrane(damped).gamma(),
        config.substrate().gamma(),
        xi,
        x_partner.abs(),
    ))
}

/// [`linewidth_approx`] for mode j driven by mode i.
pub fn nonlinear_linewidth_approx(config: &SystemConfig, x_i: f64) -> Result<f64> {
    let xi = xi_scale_for(config, Membrane::J)?;
    Ok(linewidth_approx(
        config.mode_j().gamma(),
        config.substrate().gamma(),
        xi,
        x_i.abs(),
    ))
}

/// `Q(x)/Q₀ = γ/γ(x)`.
pub fn quality_ratio(gamma: f64, gamma_s: f64, xi: f64, x: f64) -> f64 {
    gamma / linewidth_exact(gamma, gamma_s, xi, x).gamma
}
