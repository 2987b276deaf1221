//! Exact one-step transition matrices for tiny lattices, obtained by
//! replaying a move under every possible sequence of random decisions.

use super::{MoveFamily, PathConfig, RandomSource, Sweeper};
use crate::error::{Error, Result};

/// Largest `L * P` accepted by [`transition_matrix`].
pub const MAX_SITES: usize = 16;

/// A [`RandomSource`] that walks the decision tree depth first. Each replay
/// follows the current script, extending it with first choices, and
/// accumulates the probability of the path taken.
#[derive(Clone, Debug, Default)]
pub struct BranchEnumerator {
    // (choice, arity)
    script: Vec<(usize, usize)>,
    pos: usize,
    weight: f64,
}

impl BranchEnumerator {
    pub fn new() -> Self {
        BranchEnumerator {
            script: Vec::new(),
            pos: 0,
            weight: 1.0,
        }
    }

    fn choose(&mut self, arity: usize) -> usize {
        if self.pos == self.script.len() {
            self.script.push((0, arity));
        }
        let (c, a) = self.script[self.pos];
        debug_assert_eq!(a, arity, "replay diverged from the script");
        self.pos += 1;
        c
    }

    /// Probability of the path just replayed.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Moves to the next path. Returns false once the tree is exhausted.
    pub fn advance(&mut self) -> bool {
        self.script.truncate(self.pos);
        self.pos = 0;
        self.weight = 1.0;
        while let Some((c, a)) = self.script.pop() {
            if c + 1 < a {
                self.script.push((c + 1, a));
                return true;
            }
        }
        false
    }
}

impl RandomSource for BranchEnumerator {
    fn bernoulli(&mut self, p: f64) -> bool {
        if p >= 1.0 {
            return true;
        }
        if p <= 0.0 {
            return false;
        }
        if self.choose(2) == 0 {
            self.weight *= p;
            true
        } else {
            self.weight *= 1.0 - p;
            false
        }
    }

    fn index(&mut self, n: usize) -> usize {
        if n == 1 {
            return 0;
        }
        let c = self.choose(n);
        self.weight /= n as f64;
        c
    }
}

/// Configuration number `c`: bit `i * P + k` set means `S_i^k = -1`.
pub fn config_from_index(c: usize, length: usize, trotter: usize) -> PathConfig {
    PathConfig::from_fn(length, trotter, |i, k| if (c >> (i * trotter + k)) & 1 == 1 { -1 } else { 1 })
}

pub fn index_of_config(cfg: &PathConfig) -> usize {
    cfg.spins()
        .iter()
        .enumerate()
        .filter(|(_, &s)| s < 0)
        .map(|(b, _)| 1usize << b)
        .sum()
}

/// Row-stochastic matrix `T[a][b]` of one Monte Carlo step over all
/// `2^(L P)` configurations.
pub fn transition_matrix(
    couplings: &[f64],
    temp: f64,
    trotter: usize,
    gamma: f64,
    moves: MoveFamily,
) -> Result<Vec<Vec<f64>>> {
    let l = couplings.len() + 1;
    if l * trotter > MAX_SITES {
        return Err(Error::InvalidSize(format!(
            "exhaustive enumeration is limited to {MAX_SITES} spins, got {}",
            l * trotter
        )));
    }
    let mut sweeper = Sweeper::new(couplings, temp, trotter, gamma, moves)?;
    let n = 1usize << (l * trotter);
    let mut matrix = vec![vec![0.0; n]; n];
    for (a, row) in matrix.iter_mut().enumerate() {
        let start = config_from_index(a, l, trotter);
        let mut e = BranchEnumerator::new();
        loop {
            let mut cfg = start.clone();
            sweeper.sweep(&mut cfg, &mut e);
            row[index_of_config(&cfg)] += e.weight();
            if !e.advance() {
                break;
            }
        }
    }
    Ok(matrix)
}
