//! Tabulated equilibrium curves `eps_c(Gamma)` at fixed temperature.

use super::{check_temp, ChainModes};
use crate::error::{Error, Result};
use crate::instances::Instance;

/// `eps_c` on an ascending field grid at one temperature, interpolated with
/// a monotone (Fritsch-Carlson) cubic Hermite spline.
#[derive(Clone, Debug)]
pub struct EquilibriumCurve {
    temp: f64,
    gammas: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl EquilibriumCurve {
    pub fn new(temp: f64, gammas: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::Validation("empty field grid".into()));
        }
        if gammas.len() != values.len() {
            return Err(Error::Validation("grid and values differ in length".into()));
        }
        if gammas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation("field grid must be strictly ascending".into()));
        }
        let slopes = fritsch_carlson_slopes(&gammas, &values);
        Ok(EquilibriumCurve {
            temp,
            gammas,
            values,
            slopes,
        })
    }

    pub fn temp(&self) -> f64 {
        self.temp
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn gamma_range(&self) -> (f64, f64) {
        (self.gammas[0], *self.gammas.last().unwrap())
    }

    /// Interpolated `eps_c` at `gamma`; exact at grid nodes.
    pub fn value_at(&self, gamma: f64) -> Result<f64> {
        let (lo, hi) = self.gamma_range();
        if !(gamma >= lo && gamma <= hi) {
            return Err(Error::Domain(format!(
                "field {gamma} outside tabulated range [{lo}, {hi}]"
            )));
        }
        let n = self.gammas.len();
        if n == 1 {
            return Ok(self.values[0]);
        }
        let k = match self.gammas.binary_search_by(|g| g.total_cmp(&gamma)) {
            Ok(k) => return Ok(self.values[k]),
            Err(k) => k - 1,
        };
        let h = self.gammas[k + 1] - self.gammas[k];
        let s = (gamma - self.gammas[k]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Ok(h00 * self.values[k]
            + h10 * h * self.slopes[k]
            + h01 * self.values[k + 1]
            + h11 * h * self.slopes[k + 1])
    }
}

fn fritsch_carlson_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let secants: Vec<f64> = (0..n - 1)
        .map(|k| (y[k + 1] - y[k]) / (x[k + 1] - x[k]))
        .collect();
    let mut m = vec![0.0; n];
    m[0] = secants[0];
    m[n - 1] = secants[n - 2];
    for k in 1..n - 1 {
        m[k] = if secants[k - 1] * secants[k] <= 0.0 {
            0.0
        } else {
            0.5 * (secants[k - 1] + secants[k])
        };
    }
    for k in 0..n - 1 {
        if secants[k] == 0.0 {
            m[k] = 0.0;
            m[k + 1] = 0.0;
            continue;
        }
        let a = m[k] / secants[k];
        let b = m[k + 1] / secants[k];
        let r = a * a + b * b;
        if r > 9.0 {
            let t = 3.0 / r.sqrt();
            m[k] = t * a * secants[k];
            m[k + 1] = t * b * secants[k];
        }
    }
    m
}

/// Computes `eps_c(Gamma, T)` on `grid` (ascending).
pub fn tabulate_equilibrium(inst: &Instance, grid: &[f64], temp: f64) -> Result<EquilibriumCurve> {
    ThermalCurveFactory::new(inst, grid)?.curve(temp)
}

/// Caches the normal modes on a field grid so curves at many temperatures
/// cost one `O(L^2)` pass per grid point each.
#[derive(Clone, Debug)]
pub struct ThermalCurveFactory {
    gammas: Vec<f64>,
    modes: Vec<ChainModes>,
}

impl ThermalCurveFactory {
    pub fn new(inst: &Instance, grid: &[f64]) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::Validation("empty field grid".into()));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation("field grid must be strictly ascending".into()));
        }
        let modes = grid
            .iter()
            .map(|&g| ChainModes::new(inst, g))
            .collect::<Result<Vec<_>>>()?;
        Ok(ThermalCurveFactory {
            gammas: grid.to_vec(),
            modes,
        })
    }

    /// Uniform grid `0, step, 2 step, ...` up to and including `max`.
    pub fn uniform(inst: &Instance, max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && max >= 0.0) {
            return Err(Error::Domain("grid step must be positive".into()));
        }
        let n = (max / step).round() as usize;
        let grid: Vec<f64> = (0..=n).map(|k| k as f64 * step).collect();
        Self::new(inst, &grid)
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn curve(&self, temp: f64) -> Result<EquilibriumCurve> {
        check_temp(temp)?;
        let values = self
            .modes
            .iter()
            .map(|m| m.eps_c(temp))
            .collect::<Result<Vec<_>>>()?;
        EquilibriumCurve::new(temp, self.gammas.clone(), values)
    }
}
