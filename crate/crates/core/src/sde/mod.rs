//! Time-domain integration of the three-mode system: stochastic ensembles of
//! the linear fluctuation equations and deterministic amplitude runs
//! (gain sweeps, ring-downs).

pub mod deterministic;
pub mod ensemble;
pub mod gain_sweep;
pub mod plan;
pub mod ringdown;
pub mod state;
pub mod stepper;

pub use deterministic::{Method, ModeDrive, ThreeModeSystem};
pub use ensemble::{
    run_ensemble, run_ensemble_around, trajectory_rng, CrossQuadratureEstimate, EnsembleResult, TrajectoryMoments,
    TrajectoryRecord,
};
pub use gain_sweep::{phase_grid, run_gain_sweep, GainSample, GainSweepPlan};
pub use plan::{max_euler_step, Scheme, SimPlan};
pub use ringdown::{run_ringdown, run_ringdown_with, RingdownPlan, RingdownRecord};
pub use state::FluctuationState;
pub use stepper::{step, Stepper};
