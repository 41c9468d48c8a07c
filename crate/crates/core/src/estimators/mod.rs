//! Reduction of simulated or measured data: ring-down rates, gain and
//! dissipation fits, phase-space histograms and variance checks.

pub mod dissipation;
pub mod fit;
pub mod gain;
pub mod histogram;
mod lm;
pub mod regression;
pub mod ringdown;
pub mod stats;

pub use dissipation::{fit_dissipation_curve, DissipationModel};
pub use fit::{FitParam, FitResult};
pub use gain::{fit_gain_curve, gain_curve, gain_fit_monte_carlo, Branch, EtaMode, GainFitOptions, GainMonteCarlo};
pub use histogram::{
    phase_space_summary, quadrature_histogram, sample_covariance, Histogram2D, PhaseSpaceSummary, PrincipalAxes,
};
pub use regression::{linear_regression, xi_vs_threshold_regression};
pub use ringdown::{fit_ringdown, fit_ringdown_log, quality_factor};
pub use stats::{chi_square_variance_test, sample_variance, within_sigma, VarianceTest};
