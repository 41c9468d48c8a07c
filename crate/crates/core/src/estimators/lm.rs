//! Small Levenberg–Marquardt solver for low-dimensional smooth problems.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LmOptions {
    pub max_iterations: usize,
    /// Converged when an accepted step satisfies `|δ| < step_tol (|p| + step_tol)`.
    pub step_tol: f64,
    /// Converged when `|Jᵀr|∞ < grad_tol`.
    pub grad_tol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            step_tol: 1e-10,
            grad_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LmOutcome {
    pub params: DVector<f64>,
    pub residuals: DVector<f64>,
    pub jacobian: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub message: String,
}

/// Minimizes `½|r(p)|²`. `model` returns residuals and Jacobian, or `None`
/// where `p` is outside the admissible region (the step is then rejected).
pub(crate) fn levenberg_marquardt<F>(p0: DVector<f64>, model: F, opts: &LmOptions) -> Option<LmOutcome>
where
    F: Fn(&DVector<f64>) -> Option<(DVector<f64>, DMatrix<f64>)>,
{
    let mut p = p0;
    let (mut r, mut j) = model(&p)?;
    let mut cost = r.norm_squared();
    let n = p.len();
    let mut lambda = {
        let jtj = j.transpose() * &j;
        1e-3 * (0..n).map(|k| jtj[(k, k)]).fold(0.0, f64::max).max(1e-300)
    };
    let finish = |p: DVector<f64>, r, j, it, converged, msg: &str| LmOutcome {
        params: p,
        residuals: r,
        jacobian: j,
        iterations: it,
        converged,
        message: msg.to_string(),
    };

    for it in 0..opts.max_iterations {
        let jt = j.transpose();
        let grad = &jt * &r;
        if grad.amax() < opts.grad_tol {
            return Some(finish(p, r, j, it, true, "gradient below tolerance"));
        }
        let jtj = &jt * &j;
        let mut accepted = false;
        while lambda < 1e30 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let Some(delta) = a.lu().solve(&(-&grad)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = &p + &delta;
            if let Some((rt, jt_new)) = model(&trial) {
                let ct = rt.norm_squared();
                if ct.is_finite() && ct <= cost {
                    let small = delta.norm() < opts.step_tol * (p.norm() + opts.step_tol);
                    p = trial;
                    r = rt;
                    j = jt_new;
                    cost = ct;
                    lambda = (lambda / 3.0).max(1e-300);
                    accepted = true;
                    if small {
                        return Some(finish(p, r, j, it + 1, true, "relative step below tolerance"));
                    }
                    break;
                }
            }
            lambda *= 4.0;
        }
        if !accepted {
            // No decrease is possible: a (local) minimum at machine precision.
            let grad_scale = j.norm() * r.norm();
            let ok = grad.amax() <= 1e-8 * grad_scale.max(f64::MIN_POSITIVE) || cost == 0.0;
            let msg = if ok {
                "no further decrease possible"
            } else {
                "step rejected at maximal damping"
            };
            return Some(finish(p, r, j, it, ok, msg));
        }
    }
    let n_it = opts.max_iterations;
    Some(finish(p, r, j, n_it, false, "iteration limit reached"))
}

/// `s² (JᵀJ)⁻¹` with `s² = |r|²/(n − p)`, using a pseudo-inverse when `JᵀJ`
/// is singular. Entries are NaN when `n ≤ p`.
pub(crate) fn covariance(j: &DMatrix<f64>, r: &DVector<f64>) -> DMatrix<f64> {
    let (n, p) = (j.nrows(), j.ncols());
    if n <= p {
        return DMatrix::from_element(p, p, f64::NAN);
    }
    let s2 = r.norm_squared() / (n - p) as f64;
    let jtj = j.transpose() * j;
    let inv = jtj
        .clone()
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .or_else(|| jtj.pseudo_inverse(1e-14).ok())
        .unwrap_or_else(|| DMatrix::from_element(p, p, f64::NAN));
    inv * s2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_exponential() {
        let t: Vec<f64> = (0..20).map(|k| k as f64 * 0.3).collect();
        let y: Vec<f64> = t.iter().map(|&t| 2.5 * (-0.7 * t).exp()).collect();
        let model = |p: &DVector<f64>| {
            let r = DVector::from_iterator(t.len(), t.iter().zip(&y).map(|(&t, &y)| p[0] * (-p[1] * t).exp() - y));
            let j = DMatrix::from_fn(t.len(), 2, |k, c| {
                let e = (-p[1] * t[k]).exp();
                if c == 0 {
                    e
                } else {
                    -p[0] * t[k] * e
                }
            });
            Some((r, j))
        };
        let out = levenberg_marquardt(DVector::from_vec(vec![1.0, 0.1]), model, &LmOptions::default()).unwrap();
        assert!(out.converged, "{}", out.message);
        assert!((out.params[0] - 2.5).abs() < 1e-9);
        assert!((out.params[1] - 0.7).abs() < 1e-9);
    }

    #[test]
    fn covariance_of_line() {
        // y = a x with unit residual variance → var(a) = s²/Σx²
        let x = DMatrix::from_column_slice(4, 1, &[1.0, 2.0, 3.0, 4.0]);
        let r = DVector::from_vec(vec![1.0, -1.0, 1.0, -1.0]);
        let c = covariance(&x, &r);
        assert!((c[(0, 0)] - (4.0 / 3.0) / 30.0).abs() < 1e-15);
    }
}
