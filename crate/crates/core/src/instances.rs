//! Random-bond open Ising chains.
//!
//! An [`Instance`] is the list of `L - 1` positive nearest-neighbour couplings
//! of an open chain of `L` spins. Couplings are drawn from a ChaCha8 stream
//! seeded with `seed`, so the same `(L, distribution, seed)` triple gives the
//! same couplings on every platform.
//!
//! The on-disk format is plain UTF-8 text:
//!
//! ```text
//! L=4
//! distribution=uniform01
//! seed=7
//! 5.2170310913291061e-1
//! 9.6203472128424823e-1
//! 1.3893245658510017e-1
//! ```

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::chain_rng;

/// Law the couplings are drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Distribution {
    /// Independent couplings uniform on (0, 1].
    Uniform01,
    /// Every coupling equal to the given value.
    Ordered(f64),
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distribution::Uniform01 => write!(f, "uniform01"),
            Distribution::Ordered(j) => write!(f, "ordered({j})"),
        }
    }
}

impl FromStr for Distribution {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        if s == "uniform01" {
            return Ok(Distribution::Uniform01);
        }
        if s == "ordered" {
            return Ok(Distribution::Ordered(1.0));
        }
        if let Some(inner) = s.strip_prefix("ordered(").and_then(|r| r.strip_suffix(')')) {
            let j: f64 = inner
                .trim()
                .parse()
                .map_err(|_| format!("bad ordered coupling {inner:?}"))?;
            if !(j > 0.0 && j.is_finite()) {
                return Err(format!("ordered coupling must be positive, got {j}"));
            }
            return Ok(Distribution::Ordered(j));
        }
        Err(format!("unknown distribution {s:?} (expected uniform01 or ordered(J))"))
    }
}

/// A chain of `length` spins with open boundaries and positive bonds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    length: usize,
    couplings: Vec<f64>,
    distribution: Distribution,
    seed: u64,
}

impl Instance {
    /// Builds an instance from explicit couplings, checking the invariants.
    pub fn from_couplings(
        couplings: Vec<f64>,
        distribution: Distribution,
        seed: u64,
    ) -> Result<Self> {
        let length = couplings.len() + 1;
        if length < 2 {
            return Err(Error::InvalidSize("a chain needs at least 2 spins".into()));
        }
        if let Some((i, j)) = couplings
            .iter()
            .enumerate()
            .find(|(_, j)| !(**j > 0.0 && j.is_finite()))
        {
            return Err(Error::Validation(format!(
                "coupling J_{} = {j} is not strictly positive",
                i + 1
            )));
        }
        Ok(Instance {
            length,
            couplings,
            distribution,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Bond couplings; entry `i` couples spins `i` and `i + 1` (0-based).
    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn distribution(&self) -> Distribution {
        self.distribution
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sum of all bond couplings.
    pub fn total_coupling(&self) -> f64 {
        self.couplings.iter().sum()
    }

    /// Energy per spin of the two ferromagnetic ground states at zero field.
    pub fn classical_ground_energy(&self) -> f64 {
        -self.total_coupling() / self.length as f64
    }

    /// Serializes to the text format described in the module docs.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "L={}\ndistribution={}\nseed={}\n",
            self.length, self.distribution, self.seed
        );
        for j in &self.couplings {
            out.push_str(&format!("{j:.16e}\n"));
        }
        out
    }

    /// Parses the text format. `origin` only labels error messages.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l.trim()));

        let mut header = |key: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((n, l)) => match l.split_once('=') {
                    Some((k, v)) if k.trim() == key => Ok((n, v.trim().to_string())),
                    _ => Err(parse_err(n, format!("expected `{key}=<value>`, found {l:?}"))),
                },
                None => Err(parse_err(0, format!("missing `{key}=` header"))),
            }
        };
        let (n, l_raw) = header("L")?;
        let length: usize = l_raw
            .parse()
            .map_err(|_| parse_err(n, format!("bad chain length {l_raw:?}")))?;
        if length < 2 {
            return Err(Error::InvalidSize(format!(
                "{}: chain length {length} < 2",
                origin.display()
            )));
        }
        let (n, d_raw) = header("distribution")?;
        let distribution: Distribution = d_raw.parse().map_err(|m| parse_err(n, m))?;
        let (n, s_raw) = header("seed")?;
        let seed: u64 = s_raw
            .parse()
            .map_err(|_| parse_err(n, format!("bad seed {s_raw:?}")))?;

        let mut couplings = Vec::with_capacity(length - 1);
        let mut last_line = n;
        for (n, l) in lines {
            last_line = n;
            if l.is_empty() {
                continue;
            }
            if couplings.len() == length - 1 {
                return Err(parse_err(
                    n,
                    format!("expected {} couplings, found more", length - 1),
                ));
            }
            let j: f64 = l
                .parse()
                .map_err(|_| parse_err(n, format!("bad coupling {l:?}")))?;
            if !(j > 0.0 && j.is_finite()) {
                return Err(Error::Validation(format!(
                    "{}: line {n}: coupling {j} is not strictly positive",
                    origin.display()
                )));
            }
            couplings.push(j);
        }
        if couplings.len() != length - 1 {
            return Err(parse_err(
                last_line,
                format!(
                    "expected {} couplings, found {}",
                    length - 1,
                    couplings.len()
                ),
            ));
        }
        Instance::from_couplings(couplings, distribution, seed)
    }
}

/// Draws a fresh instance. Uniform couplings are `1 - u` with `u` uniform on
/// `[0, 1)`, which keeps every bond strictly positive.
pub fn generate_instance(length: usize, distribution: Distribution, seed: u64) -> Result<Instance> {
    if length < 2 {
        return Err(Error::InvalidSize(format!(
            "chain length must be at least 2, got {length}"
        )));
    }
    let couplings = match distribution {
        Distribution::Uniform01 => {
            let mut rng = chain_rng(seed, 0);
            (0..length - 1).map(|_| 1.0 - rng.random::<f64>()).collect()
        }
        Distribution::Ordered(j) => {
            if !(j > 0.0 && j.is_finite()) {
                return Err(Error::Validation(format!(
                    "ordered coupling must be positive, got {j}"
                )));
            }
            vec![j; length - 1]
        }
    };
    Instance::from_couplings(couplings, distribution, seed)
}

pub fn classical_ground_energy(inst: &Instance) -> f64 {
    inst.classical_ground_energy()
}

pub fn save_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, inst.to_text())?;
    Ok(())
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    Instance::parse(&text, path)
}
