//! Small statistics toolkit for Markov-chain output: batch-means errors and
//! Geweke's convergence diagnostic.

use crate::error::{Error, Result};

/// Minimum number of batches kept by [`batch_means`].
pub const MIN_BATCHES: usize = 32;

/// Burn-in candidates as fractions of the series length.
pub const BURN_IN_GRID: [f64; 7] = [0.0, 0.01, 0.02, 0.05, 0.10, 0.20, 0.50];

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample mean and its naive standard error (independent samples).
pub fn mean_and_sem(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let m = mean(xs);
    if n == 1 {
        return (m, 0.0);
    }
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
    (m, (var / n as f64).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatchMeans {
    pub mean: f64,
    pub stderr: f64,
    pub batch_size: usize,
    pub n_batches: usize,
}

/// Mean with an autocorrelation-aware error: the batch size is doubled for
/// as long as at least [`MIN_BATCHES`] full batches remain. Series shorter
/// than that use batch size one.
pub fn batch_means(xs: &[f64]) -> Result<BatchMeans> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::Validation(format!(
            "batch means need at least 2 samples, got {n}"
        )));
    }
    let mut size = 1;
    while n / (2 * size) >= MIN_BATCHES {
        size *= 2;
    }
    let n_batches = n / size;
    let batches: Vec<f64> = xs[..n_batches * size]
        .chunks_exact(size)
        .map(mean)
        .collect();
    let (_, stderr) = mean_and_sem(&batches);
    Ok(BatchMeans {
        mean: mean(xs),
        stderr,
        batch_size: size,
        n_batches,
    })
}

/// Spectral density at zero frequency with a Bartlett lag window of width
/// `floor(sqrt(n))`. Equals `n` times the variance of the mean for a
/// stationary series.
pub fn spectral_density_zero(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let centered: Vec<f64> = xs.iter().map(|x| x - m).collect();
    let autocov = |h: usize| {
        centered[..n - h]
            .iter()
            .zip(&centered[h..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let lags = ((n as f64).sqrt() as usize).min(n - 1);
    let mut s = autocov(0);
    for h in 1..=lags {
        s += 2.0 * (1.0 - h as f64 / (lags + 1) as f64) * autocov(h);
    }
    s.max(0.0)
}

/// Geweke z-score comparing the first 10% with the last 50% of `xs`.
pub fn geweke_z(xs: &[f64]) -> f64 {
    let n = xs.len();
    let na = (n / 10).max(1);
    let nb = (n / 2).max(1);
    let a = &xs[..na];
    let b = &xs[n - nb..];
    let diff = mean(a) - mean(b);
    let var = spectral_density_zero(a) / na as f64 + spectral_density_zero(b) / nb as f64;
    if var == 0.0 {
        if diff == 0.0 {
            return 0.0;
        }
        return diff.signum() * f64::INFINITY;
    }
    diff / var.sqrt()
}

/// Outcome of the burn-in scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BurnIn {
    /// Number of leading samples to discard.
    pub discard: usize,
    /// Geweke z-score of the retained part.
    pub z: f64,
    /// True if no candidate passed and the 50% cap was applied.
    pub capped: bool,
}

/// Smallest candidate from [`BURN_IN_GRID`] whose retained series has
/// `|z| < 2`. Falls back to discarding half the series, flagged as capped.
pub fn geweke_burn_in_samples(xs: &[f64]) -> Result<BurnIn> {
    let n = xs.len();
    if n < 100 {
        return Err(Error::Validation(format!(
            "Geweke diagnostic needs at least 100 samples, got {n}"
        )));
    }
    let mut last = BurnIn {
        discard: 0,
        z: f64::NAN,
        capped: true,
    };
    for f in BURN_IN_GRID {
        let discard = (f * n as f64).floor() as usize;
        let z = geweke_z(&xs[discard..]);
        if z.abs() < 2.0 {
            return Ok(BurnIn {
                discard,
                z,
                capped: false,
            });
        }
        last = BurnIn {
            discard,
            z,
            capped: true,
        };
    }
    Ok(last)
}
