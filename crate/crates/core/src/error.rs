use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no coupling, threshold undefined")]
    NoCoupling,

    #[error("no below-threshold steady state (mu = {mu})")]
    AboveThreshold { mu: f64 },

    #[error("unstable, no stationary spectrum (largest growth rate {growth_rate:e} 1/s)")]
    Unstable { growth_rate: f64 },

    #[error("zero signal drive, eta undefined")]
    ZeroSignalDrive,

    #[error(
        "trajectory {trajectory} blew up at t = {time:e} s: |{component}| = {value:e} m exceeds guard {guard:e} m"
    )]
    BlowUp {
        trajectory: usize,
        time: f64,
        component: &'static str,
        value: f64,
        guard: f64,
    },

    #[error("steady state not reached after {duration:e} s (relative residual {residual:e})")]
    NotConverged { duration: f64, residual: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("linear algebra failure: {0}")]
    Singular(&'static str),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
