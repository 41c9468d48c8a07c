use nalgebra::DMatrix;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitParam {
    pub name: String,
    pub value: f64,
    pub std_error: f64,
}

/// Outcome of a least-squares fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub params: Vec<FitParam>,
    /// Covariance of the estimates, in the order of `params`.
    #[serde(skip)]
    pub covariance: DMatrix<f64>,
    /// `|r|` of the final residual vector.
    pub residual_norm: f64,
    pub n_points: usize,
    pub converged: bool,
    pub message: String,
}

impl FitResult {
    pub(crate) fn new(
        names: &[&str],
        values: &[f64],
        covariance: DMatrix<f64>,
        residual_norm: f64,
        n_points: usize,
        converged: bool,
        message: impl Into<String>,
    ) -> Self {
        let params = names
            .iter()
            .zip(values)
            .enumerate()
            .map(|(k, (n, &v))| FitParam {
                name: n.to_string(),
                value: v,
                std_error: covariance.get((k, k)).map(|c| c.abs().sqrt()).unwrap_or(f64::NAN),
            })
            .collect();
        Self {
            params,
            covariance,
            residual_norm,
            n_points,
            converged,
            message: message.into(),
        }
    }

    /// Non-converged result carrying no estimates.
    pub(crate) fn failed(n_points: usize, message: impl Into<String>) -> Self {
        Self {
            params: Vec::new(),
            covariance: DMatrix::zeros(0, 0),
            residual_norm: f64::NAN,
            n_points,
            converged: false,
            message: message.into(),
        }
    }

    pub fn param(&self, name: &str) -> Option<&FitParam> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Estimate of `name`, NaN if absent.
    pub fn value(&self, name: &str) -> f64 {
        self.param(name).map_or(f64::NAN, |p| p.value)
    }

    pub fn std_error(&self, name: &str) -> f64 {
        self.param(name).map_or(f64::NAN, |p| p.std_error)
    }
}
