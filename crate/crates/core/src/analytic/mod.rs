//! Closed-form and deterministic-numeric results of the three-mode model.

pub mod correlations;
pub mod dissipation;
pub mod fluctuations;
pub mod gain;
mod integrate;
pub mod spectrum;

pub use correlations::{
    band_limited_correlations, correlations_closed_form, correlations_from_spectrum, correlations_lyapunov,
    correlations_lyapunov_euler, cross_quadrature_stats, CorrelationSet, CorrelationSource, CrossQuadratureStats,
};
pub use dissipation::{
    linewidth_approx, linewidth_exact, nonlinear_linewidth, nonlinear_linewidth_approx, nonlinear_linewidth_for,
    quality_ratio, Linewidth,
};
pub use fluctuations::{
    canonical_rotation, diffusion_matrix, drift_matrices, instability_growth_rate, rotate_quadratures, DiffusionMatrix,
    DriftMatrices, MeanAmplitudes,
};
pub use gain::{
    deamplification_window, drives_for_amplitudes, eta_from_drives, gain_phase, measured_drives, phase_gain,
    pump_phase_for, steady_state_amplitudes, Complex64, ComplexAmplitude, Drive,
};
pub use spectrum::{spectrum, SpectrumPair};
