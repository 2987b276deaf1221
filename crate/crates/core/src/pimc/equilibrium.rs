//! Fixed-field sampling with automatic burn-in.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{eps_avg, eps_min, PathConfig, PimcParams, Sweeper};
use crate::error::{Error, Result};
use crate::instances::Instance;
use crate::stats::{batch_means, geweke_burn_in_samples};

/// Per-step samples of both residual-energy estimators.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSeries {
    mcs: Vec<u64>,
    eps_avg: Vec<f64>,
    eps_min: Vec<f64>,
}

impl MeasurementSeries {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a sample; step indices must increase strictly.
    pub fn push(&mut self, mcs: u64, eps_avg: f64, eps_min: f64) -> Result<()> {
        if let Some(&last) = self.mcs.last() {
            if mcs <= last {
                return Err(Error::Validation(format!(
                    "sample index {mcs} does not follow {last}"
                )));
            }
        }
        self.mcs.push(mcs);
        self.eps_avg.push(eps_avg);
        self.eps_min.push(eps_min);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.mcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mcs.is_empty()
    }

    pub fn mcs(&self) -> &[u64] {
        &self.mcs
    }

    pub fn eps_avg(&self) -> &[f64] {
        &self.eps_avg
    }

    pub fn eps_min(&self) -> &[f64] {
        &self.eps_min
    }
}

/// Burn-in chosen by Geweke's diagnostic on the `eps_avg` samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GewekeChoice {
    /// Steps discarded, i.e. the index of the first kept sample's step minus
    /// one measurement interval.
    pub t_burn: u64,
    /// Samples discarded.
    pub discard: usize,
    pub z: f64,
    /// Set when no candidate passed and half the run was discarded.
    pub capped: bool,
}

/// Runs the burn-in scan on `series` and reports the cut as a step count.
pub fn geweke_burn_in(series: &MeasurementSeries) -> Result<GewekeChoice> {
    let b = geweke_burn_in_samples(series.eps_avg())?;
    let t_burn = if b.discard == 0 { 0 } else { series.mcs[b.discard - 1] };
    Ok(GewekeChoice {
        t_burn,
        discard: b.discard,
        z: b.z,
        capped: b.capped,
    })
}

/// Result of [`equilibrium_run`].
#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumEstimate {
    /// Time average of `eps_avg` after burn-in.
    pub eps_c: f64,
    /// Batch-means standard error.
    pub stderr: f64,
    pub t_burn: u64,
    /// Geweke z-score of the kept samples (NaN when burn-in was fixed).
    pub geweke_z: f64,
    /// True when the burn-in hit the 50% cap, so the estimate is suspect.
    pub burn_in_capped: bool,
    pub series: MeasurementSeries,
    pub final_config: PathConfig,
}

/// Samples from independent random spins. See [`equilibrium_run_from`].
pub fn equilibrium_run<R: RngCore + ?Sized>(
    inst: &Instance,
    params: &PimcParams,
    rng: &mut R,
) -> Result<EquilibriumEstimate> {
    let cfg = PathConfig::random(inst.len(), params.trotter, rng);
    equilibrium_run_from(cfg, inst, params, rng)
}

/// Runs `t_run` steps from `cfg`, measuring every `measure_every` steps,
/// then drops the burn-in and averages.
pub fn equilibrium_run_from<R: RngCore + ?Sized>(
    mut cfg: PathConfig,
    inst: &Instance,
    params: &PimcParams,
    rng: &mut R,
) -> Result<EquilibriumEstimate> {
    let mut sweeper = Sweeper::for_params(inst, params)?;
    cfg.check_dims(inst.len())?;
    let mut series = MeasurementSeries::new();
    for t in 1..=params.t_run {
        sweeper.sweep(&mut cfg, rng);
        if t % params.measure_every == 0 {
            let (min, _) = eps_min(&cfg, inst.couplings());
            series.push(t, eps_avg(&cfg, inst.couplings()), min)?;
        }
    }
    let (discard, t_burn, z, capped) = match params.t_burn {
        Some(b) => (series.mcs.partition_point(|&m| m <= b), b, f64::NAN, false),
        None => {
            let g = geweke_burn_in(&series)?;
            (g.discard, g.t_burn, g.z, g.capped)
        }
    };
    let kept = &series.eps_avg[discard..];
    let bm = batch_means(kept)?;
    Ok(EquilibriumEstimate {
        eps_c: bm.mean,
        stderr: bm.stderr,
        t_burn,
        geweke_z: z,
        burn_in_capped: capped,
        series,
        final_config: cfg,
    })
}
