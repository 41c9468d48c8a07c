//! Ensembles of independent fluctuation trajectories and their stationary
//! second moments.

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::correlations::{CorrelationSet, CorrelationSource};
use crate::analytic::fluctuations::MeanAmplitudes;
use crate::error::{Error, Result};
use crate::model::{normalized_pump, SystemConfig};
use crate::sde::plan::SimPlan;
use crate::sde::state::FluctuationState;
use crate::sde::stepper::Stepper;

/// Random stream of trajectory `index`: ChaCha8 keyed by the plan seed,
/// stream number = trajectory index.
pub fn trajectory_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Time averages of one trajectory after warm-up, m and m².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryMoments {
    pub n_samples: usize,
    pub mean_alpha: Vector3<f64>,
    pub mean_beta: Vector3<f64>,
    pub second_alpha: Matrix3<f64>,
    pub second_beta: Matrix3<f64>,
}

#[derive(Default)]
struct MomentAccumulator {
    n: usize,
    sum_a: Vector3<f64>,
    sum_b: Vector3<f64>,
    sum_aa: Matrix3<f64>,
    sum_bb: Matrix3<f64>,
}

impl MomentAccumulator {
    #[inline]
    fn push(&mut self, s: &FluctuationState) {
        let a = s.alpha_vec();
        let b = s.beta_vec();
        self.n += 1;
        self.sum_a += a;
        self.sum_b += b;
        self.sum_aa += a * a.transpose();
        self.sum_bb += b * b.transpose();
    }

    fn finish(self) -> TrajectoryMoments {
        let n = self.n.max(1) as f64;
        TrajectoryMoments {
            n_samples: self.n,
            mean_alpha: self.sum_a / n,
            mean_beta: self.sum_b / n,
            second_alpha: self.sum_aa / n,
            second_beta: self.sum_bb / n,
        }
    }
}

/// Samples of one trajectory at a uniform interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub index: usize,
    pub seed: u64,
    /// Time between consecutive samples, s. Sample k is at `k * interval`.
    pub interval: f64,
    pub samples: Vec<FluctuationState>,
}

impl TrajectoryRecord {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples.len()).map(move |k| k as f64 * self.interval)
    }
}

/// Cross-quadrature variances estimated from an ensemble, in thermal units,
/// ordered (x_a, x_b, y_a, y_b), with standard errors from the spread
/// across trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossQuadratureEstimate {
    pub variance: [f64; 4],
    pub std_error: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    /// Stationary covariance (time and ensemble average).
    pub correlations: CorrelationSet,
    /// Standard errors of the entries of `correlations.c_alpha` / `c_beta`.
    pub std_error_alpha: Matrix3<f64>,
    pub std_error_beta: Matrix3<f64>,
    pub moments: Vec<TrajectoryMoments>,
    pub records: Vec<TrajectoryRecord>,
    pub final_states: Vec<FluctuationState>,
    pub warnings: Vec<String>,
    pub plan: SimPlan,
}

impl EnsembleResult {
    fn grand_means(&self) -> (Vector3<f64>, Vector3<f64>) {
        mean_of(&self.moments, |m| (m.mean_alpha, m.mean_beta))
    }

    /// Cross-quadrature variances with standard errors.
    pub fn cross_quadratures(&self) -> CrossQuadratureEstimate {
        let x = self.correlations.x_th;
        let (ma, mb) = self.grand_means();
        let per_traj: Vec<[f64; 4]> = self
            .moments
            .iter()
            .map(|m| {
                let ca = m.second_alpha - ma * ma.transpose();
                let cb = m.second_beta - mb * mb.transpose();
                cross_variances(&ca, &cb, &x)
            })
            .collect();
        let mut variance = [0.0; 4];
        let mut std_error = [f64::NAN; 4];
        for q in 0..4 {
            let (mean, se) = mean_and_se(per_traj.iter().map(|v| v[q]));
            variance[q] = mean;
            std_error[q] = se;
        }
        CrossQuadratureEstimate { variance, std_error }
    }
}

fn cross_variances(ca: &Matrix3<f64>, cb: &Matrix3<f64>, x: &[f64; 3]) -> [f64; 4] {
    let n = |c: &Matrix3<f64>, r: usize, k: usize| c[(r, k)] / (x[r] * x[k]);
    let plus = |c: &Matrix3<f64>| 0.5 * (n(c, 0, 0) + n(c, 1, 1) + 2.0 * n(c, 0, 1));
    let minus = |c: &Matrix3<f64>| 0.5 * (n(c, 0, 0) + n(c, 1, 1) - 2.0 * n(c, 0, 1));
    [plus(ca), minus(ca), plus(cb), minus(cb)]
}

fn mean_of<F>(moments: &[TrajectoryMoments], f: F) -> (Vector3<f64>, Vector3<f64>)
where
    F: Fn(&TrajectoryMoments) -> (Vector3<f64>, Vector3<f64>),
{
    let n = moments.len() as f64;
    let (a, b) = moments
        .iter()
        .map(f)
        .fold((Vector3::zeros(), Vector3::zeros()), |acc, v| {
            (acc.0 + v.0, acc.1 + v.1)
        });
    (a / n, b / n)
}

/// Mean and standard error of the mean; the error is NaN for fewer than two
/// values.
pub(crate) fn mean_and_se(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    let mean = values.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

struct TrajectoryOutput {
    moments: TrajectoryMoments,
    record: Option<TrajectoryRecord>,
    final_state: FluctuationState,
}

fn run_trajectory(stepper: &Stepper, plan: &SimPlan, index: usize, warmup_steps: usize) -> Result<TrajectoryOutput> {
    let mut rng = trajectory_rng(plan.seed, index);
    let n_steps = plan.n_steps();
    let keep = index < plan.keep_records;
    let mut samples = Vec::new();
    let mut acc = MomentAccumulator::default();
    let mut state = FluctuationState::zero();
    if keep {
        samples.reserve(n_steps / plan.record_stride + 1);
        samples.push(state);
    }
    for n in 1..=n_steps {
        stepper.advance(&mut state, &mut rng);
        if let Some((component, value, guard)) = stepper.violation(&state) {
            return Err(Error::BlowUp {
                trajectory: index,
                time: n as f64 * plan.dt,
                component,
                value,
                guard,
            });
        }
        if n >= warmup_steps || n == n_steps {
            acc.push(&state);
        }
        if keep && n % plan.record_stride == 0 {
            samples.push(state);
        }
    }
    Ok(TrajectoryOutput {
        moments: acc.finish(),
        record: keep.then_some(TrajectoryRecord {
            index,
            seed: plan.seed,
            interval: plan.dt * plan.record_stride as f64,
            samples,
        }),
        final_state: state,
    })
}

/// Runs `plan.n_traj` independent trajectories of the fluctuation equations
/// around the pure squeezing state and reduces them to stationary moments.
///
/// Trajectory `k` draws from [`trajectory_rng`]`(seed, k)` and the reduction
/// runs in index order, so results do not depend on thread scheduling.
pub fn run_ensemble(config: &SystemConfig, plan: &SimPlan) -> Result<EnsembleResult> {
    run_ensemble_around(config, &MeanAmplitudes::squeezing(config), plan)
}

/// [`run_ensemble`] linearized around an arbitrary mean state.
pub fn run_ensemble_around(config: &SystemConfig, mean: &MeanAmplitudes, plan: &SimPlan) -> Result<EnsembleResult> {
    let mut warnings = plan.validate(config)?;
    let mu = normalized_pump(config)?;
    if mu >= 1.0 && !plan.allow_above_threshold {
        return Err(Error::AboveThreshold { mu });
    }
    let stepper = Stepper::new(config, mean, plan)?;
    let warmup_steps = plan.warmup_steps(config);

    let outputs: Vec<Result<TrajectoryOutput>> = (0..plan.n_traj)
        .into_par_iter()
        .map(|k| run_trajectory(&stepper, plan, k, warmup_steps))
        .collect();
    let mut moments = Vec::with_capacity(plan.n_traj);
    let mut records = Vec::new();
    let mut final_states = Vec::with_capacity(plan.n_traj);
    for out in outputs {
        let out = out?;
        moments.push(out.moments);
        final_states.push(out.final_state);
        records.extend(out.record);
    }

    let (ma, mb) = mean_of(&moments, |m| (m.mean_alpha, m.mean_beta));
    let second = |f: fn(&TrajectoryMoments) -> Matrix3<f64>| {
        let n = moments.len() as f64;
        let mean = moments.iter().map(f).fold(Matrix3::zeros(), |a, b| a + b) / n;
        let se = if moments.len() < 2 {
            Matrix3::from_element(f64::NAN)
        } else {
            let var = moments
                .iter()
                .map(|m| (f(m) - mean).map(|v| v * v))
                .fold(Matrix3::zeros(), |a, b| a + b)
                / (n - 1.0);
            var.map(|v| (v / n).sqrt())
        };
        (mean, se)
    };
    let (sa, se_a) = second(|m| m.second_alpha);
    let (sb, se_b) = second(|m| m.second_beta);
    let c_alpha = sa - ma * ma.transpose();
    let c_beta = sb - mb * mb.transpose();
    if plan.n_traj < 2 {
        warnings.push("a single trajectory gives no ensemble standard errors".to_string());
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(EnsembleResult {
        correlations: CorrelationSet::new(
            config,
            c_alpha,
            c_beta,
            CorrelationSource::Ensemble { n_traj: plan.n_traj },
        ),
        std_error_alpha: se_a,
        std_error_beta: se_b,
        moments,
        records,
        final_states,
        warnings,
        plan: plan.clone(),
    })
}
