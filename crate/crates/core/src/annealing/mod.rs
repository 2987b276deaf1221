//! Annealing drivers sharing one field schedule: simulated quantum annealing
//! over Monte Carlo time, and trajectory records common to the coherent
//! solver.

mod schedule;
mod sqa;

pub use schedule::{schedule_gamma, Schedule, ScheduleForm};
pub use sqa::{
    default_equilibration, sqa_repetition, sqa_run, SqaOptions, SqaOutcome, SqaSummaryRow, DEFAULT_REPS,
};

use serde::{Deserialize, Serialize};

/// One sample along an annealing run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub gamma: f64,
    /// Trotter-averaged residual energy (the only estimator for coherent runs).
    pub eps_avg: f64,
    /// Residual energy of the best Trotter slice.
    pub eps_min: f64,
    /// 1-based index of the best slice; `None` for coherent runs.
    pub slice: Option<usize>,
    pub repetition: usize,
}

impl TrajectoryRecord {
    pub fn coherent(t: f64, gamma: f64, eps: f64) -> Self {
        TrajectoryRecord {
            t,
            gamma,
            eps_avg: eps,
            eps_min: eps,
            slice: None,
            repetition: 0,
        }
    }
}
