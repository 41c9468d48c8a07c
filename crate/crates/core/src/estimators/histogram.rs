//! Phase-space histograms of thermally normalized quadratures.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::Matrix2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sde::FluctuationState;

/// Uniform 2-D histogram. `counts[ix * ny + iy]` holds bin `(ix, iy)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram2D {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Histogram2D {
    pub fn new(x_range: (f64, f64), y_range: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::invalid("bins", "must be at least 1"));
        }
        for (name, (lo, hi)) in [("x_range", x_range), ("y_range", y_range)] {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::invalid(name, format!("needs finite lo < hi, got ({lo}, {hi})")));
            }
        }
        Ok(Self {
            x_range,
            y_range,
            nx,
            ny,
            counts: vec![0; nx * ny],
            total: 0,
        })
    }

    /// Bins every point, clamping the ones outside the ranges into the
    /// edge bins so that `total` always equals the number pushed.
    pub fn push(&mut self, x: f64, y: f64) {
        let ix = bin_index(x, self.x_range, self.nx);
        let iy = bin_index(y, self.y_range, self.ny);
        self.counts[ix * self.ny + iy] += 1;
        self.total += 1;
    }

    pub fn count(&self, ix: usize, iy: usize) -> u64 {
        self.counts[ix * self.ny + iy]
    }

    pub fn bin_width(&self) -> (f64, f64) {
        (
            (self.x_range.1 - self.x_range.0) / self.nx as f64,
            (self.y_range.1 - self.y_range.0) / self.ny as f64,
        )
    }

    pub fn bin_center(&self, ix: usize, iy: usize) -> (f64, f64) {
        let (wx, wy) = self.bin_width();
        (
            self.x_range.0 + (ix as f64 + 0.5) * wx,
            self.y_range.0 + (iy as f64 + 0.5) * wy,
        )
    }

    /// Covariance of the binned distribution, placing each count at its bin
    /// centre. Exceeds the sample covariance by about `w²/12` on the diagonal.
    pub fn covariance(&self) -> Matrix2<f64> {
        let n = self.total.max(1) as f64;
        let (mut sx, mut sy) = (0.0, 0.0);
        let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
        for ix in 0..self.nx {
            for iy in 0..self.ny {
                let c = self.count(ix, iy) as f64;
                if c == 0.0 {
                    continue;
                }
                let (x, y) = self.bin_center(ix, iy);
                sx += c * x;
                sy += c * y;
                sxx += c * x * x;
                syy += c * y * y;
                sxy += c * x * y;
            }
        }
        let (mx, my) = (sx / n, sy / n);
        let cxy = sxy / n - mx * my;
        Matrix2::new(sxx / n - mx * mx, cxy, cxy, syy / n - my * my)
    }

    pub fn std(&self) -> (f64, f64) {
        let c = self.covariance();
        (c[(0, 0)].max(0.0).sqrt(), c[(1, 1)].max(0.0).sqrt())
    }
}

fn bin_index(v: f64, (lo, hi): (f64, f64), n: usize) -> usize {
    let t = (v - lo) / (hi - lo) * n as f64;
    if t.is_nan() {
        0
    } else {
        (t.floor().max(0.0) as usize).min(n - 1)
    }
}

/// Histogram of `(x, y)` samples on `bins × bins` bins spanning the sample
/// range symmetrically about zero.
pub fn quadrature_histogram(samples: &[(f64, f64)], bins: usize) -> Result<Histogram2D> {
    let reach = samples
        .iter()
        .flat_map(|&(x, y)| [x.abs(), y.abs()])
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    let reach = if reach > 0.0 { reach * (1.0 + 1e-9) } else { 1.0 };
    let mut h = Histogram2D::new((-reach, reach), (-reach, reach), bins, bins)?;
    for &(x, y) in samples {
        h.push(x, y);
    }
    Ok(h)
}

/// Orientation and spread of a 2-D distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrincipalAxes {
    /// Angle of the major axis from the x axis, in (−π/2, π/2].
    pub angle: f64,
    pub std_major: f64,
    pub std_minor: f64,
}

impl PrincipalAxes {
    pub fn from_covariance(c: &Matrix2<f64>) -> Self {
        let (a, b, d) = (c[(0, 0)], c[(0, 1)], c[(1, 1)]);
        let mean = 0.5 * (a + d);
        let half = (0.25 * (a - d).powi(2) + b * b).sqrt();
        let angle = 0.5 * (2.0 * b).atan2(a - d);
        Self {
            angle,
            std_major: (mean + half).max(0.0).sqrt(),
            std_minor: (mean - half).max(0.0).sqrt(),
        }
    }

    pub fn ratio(&self) -> f64 {
        self.std_major / self.std_minor
    }
}

/// Sample statistics of thermally normalized membrane quadratures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSpaceSummary {
    /// `(α̃_i, α̃_j)`
    pub alpha: Histogram2D,
    /// `(β̃_i, β̃_j)`
    pub beta: Histogram2D,
    /// `(x_a, x_b)`
    pub cross_x: Histogram2D,
    /// `(y_a, y_b)`
    pub cross_y: Histogram2D,
    pub alpha_axes: PrincipalAxes,
    pub beta_axes: PrincipalAxes,
    /// Sample standard deviations of `x_a, x_b, y_a, y_b`.
    pub cross_std: [f64; 4],
    pub n_samples: usize,
}

/// Normalizes each state by the thermal amplitudes `x_th` (membranes first)
/// and reduces to histograms and cross-quadrature spreads, with
/// `x_{a,b} = (α̃_i ± α̃_j)/√2` and `y_{a,b} = (β̃_i ± β̃_j)/√2`.
pub fn phase_space_summary(states: &[FluctuationState], x_th: &[f64], bins: usize) -> Result<PhaseSpaceSummary> {
    if states.is_empty() {
        return Err(Error::InsufficientData("no samples".to_string()));
    }
    if x_th.len() < 2 || x_th[..2].iter().any(|x| !(*x > 0.0)) {
        return Err(Error::invalid("x_th", "needs two positive thermal amplitudes"));
    }
    if states.len() < 1000 {
        log::warn!(
            "phase-space summary from {} samples; at least 1000 recommended",
            states.len()
        );
    }
    let alpha: Vec<(f64, f64)> = states
        .iter()
        .map(|s| (s.alpha[0] / x_th[0], s.alpha[1] / x_th[1]))
        .collect();
    let beta: Vec<(f64, f64)> = states
        .iter()
        .map(|s| (s.beta[0] / x_th[0], s.beta[1] / x_th[1]))
        .collect();
    let rotate = |&(u, v): &(f64, f64)| (FRAC_1_SQRT_2 * (u + v), FRAC_1_SQRT_2 * (u - v));
    let cross_x: Vec<(f64, f64)> = alpha.iter().map(rotate).collect();
    let cross_y: Vec<(f64, f64)> = beta.iter().map(rotate).collect();

    let ca = sample_covariance(&alpha);
    let cb = sample_covariance(&beta);
    let cx = sample_covariance(&cross_x);
    let cy = sample_covariance(&cross_y);
    Ok(PhaseSpaceSummary {
        alpha: quadrature_histogram(&alpha, bins)?,
        beta: quadrature_histogram(&beta, bins)?,
        cross_x: quadrature_histogram(&cross_x, bins)?,
        cross_y: quadrature_histogram(&cross_y, bins)?,
        alpha_axes: PrincipalAxes::from_covariance(&ca),
        beta_axes: PrincipalAxes::from_covariance(&cb),
        cross_std: [cx[(0, 0)], cx[(1, 1)], cy[(0, 0)], cy[(1, 1)]].map(|v| v.max(0.0).sqrt()),
        n_samples: states.len(),
    })
}

/// Covariance of 2-D samples about their mean (divisor n).
pub fn sample_covariance(samples: &[(f64, f64)]) -> Matrix2<f64> {
    let n = samples.len().max(1) as f64;
    let (mx, my) = samples.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (mx / n, my / n);
    let mut c = Matrix2::zeros();
    for &(x, y) in samples {
        let (dx, dy) = (x - mx, y - my);
        c[(0, 0)] += dx * dx;
        c[(0, 1)] += dx * dy;
        c[(1, 1)] += dy * dy;
    }
    c[(1, 0)] = c[(0, 1)];
    c / n
}
