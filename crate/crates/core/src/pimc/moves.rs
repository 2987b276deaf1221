//! Cluster moves. Every move is generic over [`RandomSource`] so the same
//! code runs on a real generator and under the exhaustive enumerator used to
//! check detailed balance.

use rand::{Rng, RngCore};

use super::{MoveFamily, PathConfig, PimcParams, TemporalCoupling};
use crate::error::{Error, Result};
use crate::instances::Instance;

/// The random decisions a move needs.
pub trait RandomSource {
    /// True with probability `p`. Must not consume randomness when `p` is 0
    /// or 1.
    fn bernoulli(&mut self, p: f64) -> bool;
    /// Uniform integer in `0..n`.
    fn index(&mut self, n: usize) -> usize;
}

impl<R: RngCore + ?Sized> RandomSource for R {
    #[inline]
    fn bernoulli(&mut self, p: f64) -> bool {
        if p >= 1.0 {
            true
        } else if p <= 0.0 {
            false
        } else {
            self.random::<f64>() < p
        }
    }

    #[inline]
    fn index(&mut self, n: usize) -> usize {
        if n == 1 {
            0
        } else {
            self.random_range(0..n)
        }
    }
}

const UNDECIDED: u8 = 2;

/// Reusable state for Monte Carlo steps at one `(T, P)` and a field that can
/// change between steps.
#[derive(Clone, Debug)]
pub struct Sweeper {
    moves: MoveFamily,
    trotter: usize,
    beta_p: f64,
    gamma: f64,
    couplings: Vec<f64>,
    spatial_p: Vec<f64>,
    temporal: TemporalCoupling,
    temporal_p: f64,
    active: Vec<bool>,
    field: Vec<f64>,
    parent: Vec<u32>,
    decision: Vec<u8>,
    in_cluster: Vec<bool>,
    stack: Vec<u32>,
}

impl Sweeper {
    /// `couplings` may be empty, which describes a single site.
    pub fn new(couplings: &[f64], temp: f64, trotter: usize, gamma: f64, moves: MoveFamily) -> Result<Self> {
        if !(temp > 0.0 && temp.is_finite()) {
            return Err(Error::Validation(format!("temperature must be positive, got {temp}")));
        }
        if trotter == 0 {
            return Err(Error::Validation("number of Trotter slices must be positive".into()));
        }
        let beta_p = 1.0 / (temp * trotter as f64);
        let spatial_p = couplings.iter().map(|j| -(-2.0 * beta_p * j).exp_m1()).collect();
        let n = (couplings.len() + 1) * trotter;
        let mut s = Sweeper {
            moves,
            trotter,
            beta_p,
            gamma: f64::NAN,
            couplings: couplings.to_vec(),
            spatial_p,
            temporal: TemporalCoupling::Frozen,
            temporal_p: 1.0,
            active: vec![false; trotter],
            field: Vec::new(),
            parent: Vec::new(),
            decision: Vec::new(),
            in_cluster: Vec::new(),
            stack: Vec::new(),
        };
        if moves != MoveFamily::TimeCluster {
            s.parent = vec![0; n];
            s.decision = vec![UNDECIDED; n];
            s.in_cluster = vec![false; n];
        }
        s.set_gamma(gamma)?;
        Ok(s)
    }

    pub fn for_params(inst: &Instance, params: &PimcParams) -> Result<Self> {
        params.validate()?;
        Self::new(inst.couplings(), params.temp, params.trotter, params.gamma, params.moves)
    }

    pub fn set_gamma(&mut self, gamma: f64) -> Result<()> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::Domain(format!("transverse field must be non-negative, got {gamma}")));
        }
        if gamma != self.gamma {
            self.gamma = gamma;
            self.temporal = TemporalCoupling::new(self.beta_p, gamma)?;
            self.temporal_p = self.temporal.activation(self.beta_p, gamma);
        }
        Ok(())
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn beta_p(&self) -> f64 {
        self.beta_p
    }

    pub fn moves(&self) -> MoveFamily {
        self.moves
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    /// One Monte Carlo step with the configured move family.
    pub fn sweep<R: RandomSource + ?Sized>(&mut self, cfg: &mut PathConfig, rng: &mut R) {
        assert_eq!(cfg.length(), self.couplings.len() + 1, "site count mismatch");
        assert_eq!(cfg.trotter(), self.trotter, "slice count mismatch");
        match self.moves {
            MoveFamily::TimeCluster => self.time_cluster(cfg, rng),
            MoveFamily::SpacetimeSw => self.spacetime_sw(cfg, rng),
            MoveFamily::SpacetimeWolff => self.spacetime_wolff(cfg, rng),
        }
    }

    /// One pass over all sites. Each column is cut into segments by the
    /// temporal bonds that stay inactive, and each segment is flipped with
    /// heat-bath probability `1/(1 + exp(dK))` where `dK` is the change of the
    /// spatial action.
    fn time_cluster<R: RandomSource + ?Sized>(&mut self, cfg: &mut PathConfig, rng: &mut R) {
        let l = cfg.length();
        let p = self.trotter;
        let frozen = self.temporal == TemporalCoupling::Frozen;
        let spins = cfg.spins_mut();
        self.field.resize(p, 0.0);
        for i in 0..l {
            // bond k joins slices k and k+1 (mod P); P = 1 has none
            if p > 1 {
                let col = &spins[i * p..(i + 1) * p];
                for k in 0..p - 1 {
                    self.active[k] = frozen || (col[k] == col[k + 1] && rng.bernoulli(self.temporal_p));
                }
                self.active[p - 1] = frozen || (col[p - 1] == col[0] && rng.bernoulli(self.temporal_p));
            }
            // local spatial field on each slice
            for h in self.field.iter_mut() {
                *h = 0.0;
            }
            if i > 0 {
                let j = self.couplings[i - 1];
                for (h, &s) in self.field.iter_mut().zip(&spins[(i - 1) * p..i * p]) {
                    *h += j * s as f64;
                }
            }
            if i + 1 < l {
                let j = self.couplings[i];
                for (h, &s) in self.field.iter_mut().zip(&spins[(i + 1) * p..(i + 2) * p]) {
                    *h += j * s as f64;
                }
            }
            let start = if p == 1 {
                0
            } else {
                match self.active.iter().position(|a| !a) {
                    Some(f) if f + 1 < p => f + 1,
                    _ => 0,
                }
            };
            let col = &mut spins[i * p..(i + 1) * p];
            let mut seg_start = start;
            let mut len = 0;
            let mut field_sum = 0.0;
            let mut k = start;
            for step in 0..p {
                field_sum += col[k] as f64 * self.field[k];
                len += 1;
                if p == 1 || !self.active[k] || step == p - 1 {
                    let dk = 2.0 * self.beta_p * field_sum;
                    if rng.bernoulli(1.0 / (1.0 + dk.exp())) {
                        let mut x = seg_start;
                        for _ in 0..len {
                            col[x] = -col[x];
                            x += 1;
                            if x == p {
                                x = 0;
                            }
                        }
                    }
                    seg_start = if k + 1 == p { 0 } else { k + 1 };
                    len = 0;
                    field_sum = 0.0;
                }
                k += 1;
                if k == p {
                    k = 0;
                }
            }
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let up = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = up;
            x = up;
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a as u32);
        let rb = self.find(b as u32);
        if ra != rb {
            // smaller index becomes the root, which keeps results independent
            // of any balancing heuristic
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }

    /// Full Swendsen-Wang decomposition over space and imaginary time; every
    /// cluster flips with probability 1/2. Flip decisions are drawn in order
    /// of each cluster's first site.
    fn spacetime_sw<R: RandomSource + ?Sized>(&mut self, cfg: &mut PathConfig, rng: &mut R) {
        let l = cfg.length();
        let p = self.trotter;
        let n = l * p;
        let frozen = self.temporal == TemporalCoupling::Frozen;
        for (x, slot) in self.parent.iter_mut().enumerate() {
            *slot = x as u32;
        }
        for i in 0..l {
            for k in 0..p {
                let a = i * p + k;
                if p > 1 {
                    let b = i * p + (k + 1) % p;
                    let s = cfg.spins();
                    if frozen || (s[a] == s[b] && rng.bernoulli(self.temporal_p)) {
                        self.union(a, b);
                    }
                }
                if i + 1 < l {
                    let b = a + p;
                    let s = cfg.spins();
                    if s[a] == s[b] && rng.bernoulli(self.spatial_p[i]) {
                        self.union(a, b);
                    }
                }
            }
        }
        for d in self.decision.iter_mut() {
            *d = UNDECIDED;
        }
        for x in 0..n {
            let r = self.find(x as u32) as usize;
            if self.decision[r] == UNDECIDED {
                self.decision[r] = rng.bernoulli(0.5) as u8;
            }
            if self.decision[r] == 1 {
                let s = cfg.spins_mut();
                s[x] = -s[x];
            }
        }
    }

    /// Grows one cluster from a uniformly chosen seed and flips it.
    fn spacetime_wolff<R: RandomSource + ?Sized>(&mut self, cfg: &mut PathConfig, rng: &mut R) {
        let l = cfg.length();
        let p = self.trotter;
        let frozen = self.temporal == TemporalCoupling::Frozen;
        let seed = rng.index(l * p);
        let spins = cfg.spins_mut();
        let s0 = spins[seed];
        self.stack.clear();
        let mut members: Vec<u32> = Vec::new();
        self.in_cluster[seed] = true;
        spins[seed] = -s0;
        members.push(seed as u32);
        self.stack.push(seed as u32);
        while let Some(x) = self.stack.pop() {
            let x = x as usize;
            let (i, k) = (x / p, x % p);
            // temporal neighbours first (up, then down), then spatial (left, right)
            if p > 1 {
                for nb in [i * p + (k + 1) % p, i * p + (k + p - 1) % p] {
                    if !self.in_cluster[nb]
                        && (frozen || (spins[nb] == s0 && rng.bernoulli(self.temporal_p)))
                    {
                        self.in_cluster[nb] = true;
                        spins[nb] = -spins[nb];
                        members.push(nb as u32);
                        self.stack.push(nb as u32);
                    }
                }
            }
            if i > 0 {
                let nb = x - p;
                if !self.in_cluster[nb] && spins[nb] == s0 && rng.bernoulli(self.spatial_p[i - 1]) {
                    self.in_cluster[nb] = true;
                    spins[nb] = -s0;
                    members.push(nb as u32);
                    self.stack.push(nb as u32);
                }
            }
            if i + 1 < l {
                let nb = x + p;
                if !self.in_cluster[nb] && spins[nb] == s0 && rng.bernoulli(self.spatial_p[i]) {
                    self.in_cluster[nb] = true;
                    spins[nb] = -s0;
                    members.push(nb as u32);
                    self.stack.push(nb as u32);
                }
            }
        }
        for m in members {
            self.in_cluster[m as usize] = false;
        }
    }
}

fn checked_sweeper(cfg: &PathConfig, inst: &Instance, params: &PimcParams, moves: MoveFamily) -> Result<Sweeper> {
    params.validate()?;
    cfg.check_dims(inst.len())?;
    if cfg.trotter() != params.trotter {
        return Err(Error::Validation(format!(
            "configuration has {} slices but parameters say {}",
            cfg.trotter(),
            params.trotter
        )));
    }
    Sweeper::new(inst.couplings(), params.temp, params.trotter, params.gamma, moves)
}

/// One step of time-cluster moves (`L` column updates).
pub fn sw_time_cluster_sweep<R: RandomSource + ?Sized>(
    cfg: &mut PathConfig,
    inst: &Instance,
    params: &PimcParams,
    rng: &mut R,
) -> Result<()> {
    checked_sweeper(cfg, inst, params, MoveFamily::TimeCluster)?.sweep(cfg, rng);
    Ok(())
}

/// One space-time Swendsen-Wang step.
pub fn sw_spacetime_sweep<R: RandomSource + ?Sized>(
    cfg: &mut PathConfig,
    inst: &Instance,
    params: &PimcParams,
    rng: &mut R,
) -> Result<()> {
    checked_sweeper(cfg, inst, params, MoveFamily::SpacetimeSw)?.sweep(cfg, rng);
    Ok(())
}

/// One space-time Wolff cluster flip.
pub fn spacetime_wolff_sweep<R: RandomSource + ?Sized>(
    cfg: &mut PathConfig,
    inst: &Instance,
    params: &PimcParams,
    rng: &mut R,
) -> Result<()> {
    checked_sweeper(cfg, inst, params, MoveFamily::SpacetimeWolff)?.sweep(cfg, rng);
    Ok(())
}

/// One step of whichever family `params.moves` names.
pub fn mc_step<R: RandomSource + ?Sized>(
    cfg: &mut PathConfig,
    inst: &Instance,
    params: &PimcParams,
    rng: &mut R,
) -> Result<()> {
    checked_sweeper(cfg, inst, params, params.moves)?.sweep(cfg, rng);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::chain_rng;

    #[test]
    fn lone_frozen_column_flips_half_the_time() {
        let mut sw = Sweeper::new(&[], 0.01, 16, 0.0, MoveFamily::TimeCluster).unwrap();
        let mut cfg = PathConfig::aligned(1, 16);
        let mut rng = chain_rng(1, 0);
        let n = 100_000;
        let mut flips = 0;
        for _ in 0..n {
            let before = cfg.get(0, 0);
            sw.sweep(&mut cfg, &mut rng);
            assert!(cfg.column(0).iter().all(|&s| s == cfg.get(0, 0)));
            if cfg.get(0, 0) != before {
                flips += 1;
            }
        }
        let f = flips as f64 / n as f64;
        assert!((f - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt() + 1e-3, "{f}");
    }

    #[test]
    fn frozen_column_keeps_its_domain_walls() {
        // a non-uniform column at zero field moves rigidly
        let mut sw = Sweeper::new(&[0.7], 0.1, 4, 0.0, MoveFamily::TimeCluster).unwrap();
        let mut cfg = PathConfig::from_fn(2, 4, |_, k| if k < 2 { 1 } else { -1 });
        let mut rng = chain_rng(2, 0);
        for _ in 0..50 {
            sw.sweep(&mut cfg, &mut rng);
            for i in 0..2 {
                let c = cfg.column(i);
                assert_eq!(c[0], c[1]);
                assert_eq!(c[2], c[3]);
                assert_eq!(c[0], -c[2]);
            }
        }
    }

    #[test]
    fn sw_clusters_partition_the_lattice() {
        let couplings = [0.3, 0.9, 0.5, 0.2];
        let mut sw = Sweeper::new(&couplings, 0.5, 6, 0.8, MoveFamily::SpacetimeSw).unwrap();
        let mut cfg = PathConfig::random(5, 6, &mut chain_rng(4, 0));
        let mut rng = chain_rng(4, 1);
        for _ in 0..20 {
            sw.sweep(&mut cfg, &mut rng);
            let n = 30;
            let mut count = vec![0; n];
            for x in 0..n {
                let r = sw.find(x as u32) as usize;
                count[r] += 1;
                // every site belongs to a cluster whose root is itself a root
                assert_eq!(sw.find(r as u32) as usize, r);
            }
            assert_eq!(count.iter().sum::<usize>(), n);
        }
    }

    #[test]
    fn wolff_leaves_no_marks_behind() {
        let couplings = [1.0; 7];
        let mut sw = Sweeper::new(&couplings, 0.2, 8, 0.5, MoveFamily::SpacetimeWolff).unwrap();
        let mut cfg = PathConfig::random(8, 8, &mut chain_rng(5, 0));
        let mut rng = chain_rng(5, 1);
        for _ in 0..100 {
            sw.sweep(&mut cfg, &mut rng);
            assert!(sw.in_cluster.iter().all(|m| !m));
        }
    }

    #[test]
    fn field_update_tracks_coupling() {
        let mut sw = Sweeper::new(&[1.0], 1.0, 4, 1.0, MoveFamily::SpacetimeSw).unwrap();
        let p1 = sw.temporal_p;
        sw.set_gamma(0.1).unwrap();
        assert!(sw.temporal_p > p1);
        sw.set_gamma(0.0).unwrap();
        assert_eq!(sw.temporal, TemporalCoupling::Frozen);
        assert!(sw.set_gamma(-1.0).is_err());
    }
}
