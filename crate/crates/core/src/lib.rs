//! Model of a nondegenerate mechanical parametric amplifier: two membrane
//! modes coupled through a pumped substrate mode.
//!
//! * [`model`] holds the physical parameters and derived scales.
//! * [`analytic`] evaluates steady states, gain, nonlinear damping,
//!   fluctuation spectra and correlations.
//! * [`sde`] integrates the same equations in time.
//! * [`estimators`] fits model curves and reduces simulated data.

pub mod analytic;
pub mod error;
pub mod estimators;
pub mod model;
pub mod sde;

pub use error::{Error, Result};
pub use model::{Membrane, ModeParams, SystemConfig};
