//! Path-integral Monte Carlo for the Trotterized chain.
//!
//! The quantum partition function at temperature `T` is approximated by `P`
//! coupled classical replicas with action
//!
//! ```text
//! K = -beta_P sum_k sum_i J_i S_i^k S_{i+1}^k - J_perp sum_k sum_i S_i^k S_i^{k+1}
//! ```
//!
//! where `beta_P = 1/(T P)`, `J_perp = -1/2 log tanh(beta_P Gamma)` and the
//! slice index is periodic.

mod equilibrium;
pub mod exhaustive;
mod moves;

pub use equilibrium::{
    equilibrium_run, equilibrium_run_from, geweke_burn_in, EquilibriumEstimate, MeasurementSeries,
};
pub use moves::{
    mc_step, spacetime_wolff_sweep, sw_spacetime_sweep, sw_time_cluster_sweep, RandomSource, Sweeper,
};

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::Instance;

/// Cluster update used for one Monte Carlo step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MoveFamily {
    /// Swendsen-Wang clusters along imaginary time, one pass over all sites.
    TimeCluster,
    /// Full space-time Swendsen-Wang decomposition.
    SpacetimeSw,
    /// One space-time Wolff cluster.
    SpacetimeWolff,
}

impl MoveFamily {
    pub const ALL: [MoveFamily; 3] = [
        MoveFamily::TimeCluster,
        MoveFamily::SpacetimeSw,
        MoveFamily::SpacetimeWolff,
    ];
}

impl fmt::Display for MoveFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MoveFamily::TimeCluster => "time",
            MoveFamily::SpacetimeSw => "sw",
            MoveFamily::SpacetimeWolff => "wolff",
        })
    }
}

impl FromStr for MoveFamily {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "time" | "time_cluster" => Ok(MoveFamily::TimeCluster),
            "sw" | "spacetime_sw" | "spacetime" => Ok(MoveFamily::SpacetimeSw),
            "wolff" | "spacetime_wolff" => Ok(MoveFamily::SpacetimeWolff),
            other => Err(format!("unknown move family {other:?} (expected time, sw or wolff)")),
        }
    }
}

/// Inter-slice coupling. At zero field it diverges and every column moves
/// as a single block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TemporalCoupling {
    Finite(f64),
    Frozen,
}

impl TemporalCoupling {
    pub fn new(beta_p: f64, gamma: f64) -> Result<Self> {
        if gamma == 0.0 {
            return Ok(TemporalCoupling::Frozen);
        }
        j_perp(beta_p, gamma).map(TemporalCoupling::Finite)
    }

    /// Probability `1 - exp(-2 J_perp)` of activating a satisfied bond,
    /// written as `1 - tanh(beta_P Gamma)`.
    pub fn activation(&self, beta_p: f64, gamma: f64) -> f64 {
        match self {
            TemporalCoupling::Frozen => 1.0,
            TemporalCoupling::Finite(_) => 2.0 / ((2.0 * beta_p * gamma).exp() + 1.0),
        }
    }
}

/// `J_perp = -1/2 log tanh(beta_P Gamma)`, evaluated without cancellation at
/// both ends of the range.
pub fn j_perp(beta_p: f64, gamma: f64) -> Result<f64> {
    if !(beta_p > 0.0 && beta_p.is_finite()) {
        return Err(Error::Domain(format!("beta_P must be positive, got {beta_p}")));
    }
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!(
            "inter-slice coupling diverges at Gamma = {gamma}; use the frozen limit"
        )));
    }
    let x = beta_p * gamma;
    let e = (-2.0 * x).exp();
    // log tanh x = log(1 - e) - log(1 + e)
    let log_one_minus = if e < 0.5 { (-e).ln_1p() } else { (-(-2.0 * x).exp_m1()).ln() };
    let log_tanh = log_one_minus - e.ln_1p();
    Ok(-0.5 * log_tanh)
}

/// Parameters of a fixed-field PIMC run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PimcParams {
    pub temp: f64,
    pub gamma: f64,
    pub trotter: usize,
    pub moves: MoveFamily,
    /// Total number of Monte Carlo steps.
    pub t_run: u64,
    /// Fixed burn-in; `None` selects it with Geweke's diagnostic.
    pub t_burn: Option<u64>,
    /// Record a sample every this many steps.
    pub measure_every: u64,
}

impl PimcParams {
    pub fn new(temp: f64, gamma: f64, trotter: usize, moves: MoveFamily, t_run: u64) -> Result<Self> {
        let p = PimcParams {
            temp,
            gamma,
            trotter,
            moves,
            t_run,
            t_burn: None,
            measure_every: 1,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temp > 0.0 && self.temp.is_finite()) {
            return Err(Error::Validation(format!("temperature must be positive, got {}", self.temp)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Validation(format!(
                "transverse field must be non-negative, got {}",
                self.gamma
            )));
        }
        if self.trotter == 0 {
            return Err(Error::Validation("number of Trotter slices must be positive".into()));
        }
        if self.t_run == 0 {
            return Err(Error::Validation("t_run must be at least 1".into()));
        }
        if self.measure_every == 0 {
            return Err(Error::Validation("measurement interval must be positive".into()));
        }
        if let Some(b) = self.t_burn {
            if b >= self.t_run {
                return Err(Error::Validation(format!(
                    "burn-in {b} leaves nothing of t_run = {}",
                    self.t_run
                )));
            }
        }
        Ok(())
    }

    /// Imaginary-time step `1/(T P)`.
    pub fn beta_p(&self) -> f64 {
        1.0 / (self.temp * self.trotter as f64)
    }

    pub fn temporal(&self) -> Result<TemporalCoupling> {
        TemporalCoupling::new(self.beta_p(), self.gamma)
    }
}

/// `L x P` classical spins, stored site-major (`index = i * P + k`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PathConfig {
    length: usize,
    trotter: usize,
    spins: Vec<i8>,
}

impl PathConfig {
    /// All spins up.
    pub fn aligned(length: usize, trotter: usize) -> Self {
        PathConfig {
            length,
            trotter,
            spins: vec![1; length * trotter],
        }
    }

    /// Independent `+/-1` spins.
    pub fn random<R: Rng + ?Sized>(length: usize, trotter: usize, rng: &mut R) -> Self {
        let spins = (0..length * trotter)
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        PathConfig {
            length,
            trotter,
            spins,
        }
    }

    /// Builds a configuration from `f(i, k)`; only the sign of the value
    /// matters, zero counts as up.
    pub fn from_fn(length: usize, trotter: usize, mut f: impl FnMut(usize, usize) -> i8) -> Self {
        let mut spins = Vec::with_capacity(length * trotter);
        for i in 0..length {
            for k in 0..trotter {
                spins.push(if f(i, k) < 0 { -1 } else { 1 });
            }
        }
        PathConfig {
            length,
            trotter,
            spins,
        }
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn trotter(&self) -> usize {
        self.trotter
    }

    /// Spin at site `i`, slice `k` (both 0-based).
    #[inline]
    pub fn get(&self, i: usize, k: usize) -> i8 {
        self.spins[i * self.trotter + k]
    }

    pub fn set(&mut self, i: usize, k: usize, s: i8) {
        assert!(s == 1 || s == -1, "spin must be +/-1");
        self.spins[i * self.trotter + k] = s;
    }

    /// The `P` spins of site `i`.
    pub fn column(&self, i: usize) -> &[i8] {
        &self.spins[i * self.trotter..(i + 1) * self.trotter]
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub(crate) fn spins_mut(&mut self) -> &mut [i8] {
        &mut self.spins
    }

    pub fn flip_all(&mut self) {
        for s in &mut self.spins {
            *s = -*s;
        }
    }

    fn check_dims(&self, inst_len: usize) -> Result<()> {
        if self.length != inst_len {
            return Err(Error::Validation(format!(
                "configuration has {} sites but the instance has {inst_len}",
                self.length
            )));
        }
        Ok(())
    }
}

/// Classical action of `cfg` under `params`. Undefined at zero field, where
/// the inter-slice coupling is infinite.
pub fn classical_action(cfg: &PathConfig, inst: &Instance, params: &PimcParams) -> Result<f64> {
    cfg.check_dims(inst.len())?;
    if cfg.trotter != params.trotter {
        return Err(Error::Validation(format!(
            "configuration has {} slices but parameters say {}",
            cfg.trotter, params.trotter
        )));
    }
    let beta_p = params.beta_p();
    let jp = j_perp(beta_p, params.gamma)?;
    let p = cfg.trotter;
    let mut spatial = 0.0;
    for (i, &j) in inst.couplings().iter().enumerate() {
        let dot: i32 = cfg
            .column(i)
            .iter()
            .zip(cfg.column(i + 1))
            .map(|(a, b)| (a * b) as i32)
            .sum();
        spatial += j * dot as f64;
    }
    let mut temporal = 0i64;
    for i in 0..cfg.length {
        let c = cfg.column(i);
        for k in 0..p {
            temporal += (c[k] * c[(k + 1) % p]) as i64;
        }
    }
    Ok(-beta_p * spatial - jp * temporal as f64)
}

/// Trotter-averaged residual energy
/// `(1/L) sum_i J_i (1 - (1/P) sum_k S_i^k S_{i+1}^k)`.
pub fn measure_eps_avg(cfg: &PathConfig, inst: &Instance) -> f64 {
    eps_avg(cfg, inst.couplings())
}

pub(crate) fn eps_avg(cfg: &PathConfig, couplings: &[f64]) -> f64 {
    let p = cfg.trotter as f64;
    let mut acc = 0.0;
    for (i, &j) in couplings.iter().enumerate() {
        let dot: i32 = cfg
            .column(i)
            .iter()
            .zip(cfg.column(i + 1))
            .map(|(a, b)| (a * b) as i32)
            .sum();
        acc += j * (1.0 - dot as f64 / p);
    }
    acc / cfg.length as f64
}

/// Residual energy of the best slice and its 1-based index; ties go to the
/// smallest index.
pub fn measure_eps_min(cfg: &PathConfig, inst: &Instance) -> (f64, usize) {
    eps_min(cfg, inst.couplings())
}

pub(crate) fn eps_min(cfg: &PathConfig, couplings: &[f64]) -> (f64, usize) {
    let p = cfg.trotter;
    // broken-bond energy per slice: J_i (1 - s s) is 0 or 2 J_i
    let mut broken = vec![0.0; p];
    for (i, &j) in couplings.iter().enumerate() {
        let (a, b) = (cfg.column(i), cfg.column(i + 1));
        for k in 0..p {
            if a[k] != b[k] {
                broken[k] += 2.0 * j;
            }
        }
    }
    let mut best = 0;
    for k in 1..p {
        if broken[k] < broken[best] {
            best = k;
        }
    }
    (broken[best] / cfg.length as f64, best + 1)
}
