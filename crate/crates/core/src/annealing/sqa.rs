//! Simulated quantum annealing: PIMC with the transverse field lowered every
//! Monte Carlo step.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Schedule, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::instances::Instance;
use crate::pimc::{eps_avg, eps_min, MoveFamily, PathConfig, Sweeper};
use crate::rng::chain_rng;
use crate::stats::mean_and_sem;

pub const DEFAULT_REPS: usize = 32;

/// Preliminary equilibration at the initial field, `max(1000, tau/10)`.
pub fn default_equilibration(tau: u64) -> u64 {
    (tau / 10).max(1000)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqaOptions {
    pub temp: f64,
    pub trotter: usize,
    pub moves: MoveFamily,
    pub n_reps: usize,
    /// Record every `stride` steps (and always at `t = tau`).
    pub stride: u64,
    /// Equilibration length; `None` uses [`default_equilibration`].
    pub t_eq: Option<u64>,
    /// Master seed; repetition `r` draws from stream `r + 1`.
    pub seed: u64,
}

impl SqaOptions {
    pub fn new(temp: f64, trotter: usize, moves: MoveFamily, seed: u64) -> Self {
        SqaOptions {
            temp,
            trotter,
            moves,
            n_reps: DEFAULT_REPS,
            stride: 1,
            t_eq: None,
            seed,
        }
    }
}

/// Repetition statistics at one recorded time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqaSummaryRow {
    pub t: f64,
    pub gamma: f64,
    pub eps_avg_mean: f64,
    pub eps_avg_sem: f64,
    pub eps_min_mean: f64,
    pub eps_min_sem: f64,
    pub n_reps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SqaOutcome {
    /// Records of every repetition, repetition-major.
    pub records: Vec<TrajectoryRecord>,
    pub summary: Vec<SqaSummaryRow>,
}

impl SqaOutcome {
    /// Statistics at `t = tau`.
    pub fn final_row(&self) -> &SqaSummaryRow {
        self.summary.last().expect("at least the t = 0 and t = tau rows")
    }
}

fn annealing_steps(schedule: &Schedule) -> Result<u64> {
    let tau = schedule.tau();
    if !(tau >= 1.0) || tau.fract() != 0.0 {
        return Err(Error::Validation(format!(
            "SQA needs an integer number of steps tau >= 1, got {tau}"
        )));
    }
    Ok(tau as u64)
}

fn check_options(opts: &SqaOptions) -> Result<()> {
    if opts.n_reps == 0 {
        return Err(Error::Validation("at least one repetition is required".into()));
    }
    if opts.stride == 0 {
        return Err(Error::Validation("record stride must be positive".into()));
    }
    Ok(())
}

/// One annealing run: random spins, `t_eq` steps at the initial field, then
/// one step per unit of `t` with the field taken from the schedule.
pub fn sqa_repetition(
    inst: &Instance,
    schedule: &Schedule,
    opts: &SqaOptions,
    rep: usize,
) -> Result<Vec<TrajectoryRecord>> {
    check_options(opts)?;
    let tau = annealing_steps(schedule)?;
    let mut rng = chain_rng(opts.seed, rep as u64 + 1);
    let gamma0 = schedule.gamma0();
    let mut sweeper = Sweeper::new(inst.couplings(), opts.temp, opts.trotter, gamma0, opts.moves)?;
    let mut cfg = PathConfig::random(inst.len(), opts.trotter, &mut rng);
    for _ in 0..opts.t_eq.unwrap_or_else(|| default_equilibration(tau)) {
        sweeper.sweep(&mut cfg, &mut rng);
    }
    let record = |t: u64, gamma: f64, cfg: &PathConfig| {
        let (min, slice) = eps_min(cfg, inst.couplings());
        TrajectoryRecord {
            t: t as f64,
            gamma,
            eps_avg: eps_avg(cfg, inst.couplings()),
            eps_min: min,
            slice: Some(slice),
            repetition: rep,
        }
    };
    let mut out = Vec::with_capacity((tau / opts.stride) as usize + 2);
    out.push(record(0, gamma0, &cfg));
    for t in 1..=tau {
        let gamma = schedule.gamma_at(t as f64)?;
        sweeper.set_gamma(gamma)?;
        sweeper.sweep(&mut cfg, &mut rng);
        if t % opts.stride == 0 || t == tau {
            out.push(record(t, gamma, &cfg));
        }
    }
    Ok(out)
}

/// Runs `n_reps` independent repetitions (in parallel on the current rayon
/// pool) and aggregates them. The output does not depend on the number of
/// threads.
pub fn sqa_run(inst: &Instance, schedule: &Schedule, opts: &SqaOptions) -> Result<SqaOutcome> {
    check_options(opts)?;
    annealing_steps(schedule)?;
    let runs: Vec<Vec<TrajectoryRecord>> = (0..opts.n_reps)
        .into_par_iter()
        .map(|rep| sqa_repetition(inst, schedule, opts, rep))
        .collect::<Result<_>>()?;
    let summary = (0..runs[0].len())
        .map(|j| {
            let avg: Vec<f64> = runs.iter().map(|r| r[j].eps_avg).collect();
            let min: Vec<f64> = runs.iter().map(|r| r[j].eps_min).collect();
            let (am, asem) = mean_and_sem(&avg);
            let (mm, msem) = mean_and_sem(&min);
            SqaSummaryRow {
                t: runs[0][j].t,
                gamma: runs[0][j].gamma,
                eps_avg_mean: am,
                eps_avg_sem: asem,
                eps_min_mean: mm,
                eps_min_sem: msem,
                n_reps: runs.len(),
            }
        })
        .collect();
    Ok(SqaOutcome {
        records: runs.into_iter().flatten().collect(),
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{generate_instance, Distribution};

    fn small() -> (Instance, Schedule, SqaOptions) {
        let inst = generate_instance(16, Distribution::Uniform01, 3).unwrap();
        let schedule = Schedule::linear(2.5, 200.0).unwrap();
        let mut opts = SqaOptions::new(0.05, 8, MoveFamily::TimeCluster, 11);
        opts.n_reps = 4;
        opts.stride = 50;
        opts.t_eq = Some(100);
        (inst, schedule, opts)
    }

    #[test]
    fn records_follow_the_schedule() {
        let (inst, schedule, opts) = small();
        let out = sqa_run(&inst, &schedule, &opts).unwrap();
        let ts: Vec<f64> = out.summary.iter().map(|r| r.t).collect();
        assert_eq!(ts, vec![0.0, 50.0, 100.0, 150.0, 200.0]);
        for r in &out.records {
            assert_eq!(r.gamma, schedule.gamma_at(r.t).unwrap());
            assert!(r.eps_min <= r.eps_avg);
        }
        assert_eq!(out.final_row().gamma, 0.0);
        assert_eq!(out.records.len(), 20);
    }

    #[test]
    fn final_time_is_recorded_off_stride() {
        let (inst, _, mut opts) = small();
        opts.stride = 60;
        let schedule = Schedule::linear(2.5, 130.0).unwrap();
        let recs = sqa_repetition(&inst, &schedule, &opts, 0).unwrap();
        let ts: Vec<f64> = recs.iter().map(|r| r.t).collect();
        assert_eq!(ts, vec![0.0, 60.0, 120.0, 130.0]);
    }

    #[test]
    fn bit_identical_reruns() {
        let (inst, schedule, opts) = small();
        let a = sqa_run(&inst, &schedule, &opts).unwrap();
        let b = sqa_run(&inst, &schedule, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn thread_count_does_not_matter() {
        let (inst, schedule, opts) = small();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| sqa_run(&inst, &schedule, &opts)).unwrap();
        let b = three.install(|| sqa_run(&inst, &schedule, &opts)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_runs_are_rejected() {
        let (inst, _, opts) = small();
        assert!(sqa_run(&inst, &Schedule::linear(2.5, 0.5).unwrap(), &opts).is_err());
        assert!(sqa_run(&inst, &Schedule::linear(2.5, 10.5).unwrap(), &opts).is_err());
        let mut bad = opts.clone();
        bad.n_reps = 0;
        assert!(sqa_run(&inst, &Schedule::linear(2.5, 10.0).unwrap(), &bad).is_err());
    }

    #[test]
    fn space_time_moves_survive_the_frozen_end() {
        let (inst, schedule, mut opts) = small();
        for moves in [MoveFamily::SpacetimeSw, MoveFamily::SpacetimeWolff] {
            opts.moves = moves;
            let out = sqa_run(&inst, &schedule, &opts).unwrap();
            assert!(out.final_row().eps_avg_mean.is_finite());
        }
    }

    #[test]
    fn staircase_schedule_runs() {
        let (inst, _, opts) = small();
        let schedule = Schedule::staircase(2.5, 200.0, 10).unwrap();
        let out = sqa_run(&inst, &schedule, &opts).unwrap();
        for r in &out.records {
            assert_eq!(r.gamma, schedule.gamma_at(r.t).unwrap());
        }
    }

    #[test]
    fn default_equilibration_length() {
        assert_eq!(default_equilibration(100), 1000);
        assert_eq!(default_equilibration(50_000), 5000);
    }
}
