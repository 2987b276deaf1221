use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the field ramp.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ScheduleForm {
    /// `Gamma(t) = Gamma0 (1 - t / tau)`.
    Linear,
    /// The linear ramp held constant on `steps` equal plateaus, reaching 0
    /// at `t = tau`.
    Staircase { steps: u64 },
}

/// Transverse-field ramp from `gamma0` down to zero over time `tau`
/// (Monte Carlo steps for SQA, `hbar = 1` time units for coherent runs).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    gamma0: f64,
    tau: f64,
    form: ScheduleForm,
}

impl Schedule {
    pub fn linear(gamma0: f64, tau: f64) -> Result<Self> {
        let s = Schedule {
            gamma0,
            tau,
            form: ScheduleForm::Linear,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn staircase(gamma0: f64, tau: f64, steps: u64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Domain("staircase needs at least one step".into()));
        }
        let s = Schedule {
            gamma0,
            tau,
            form: ScheduleForm::Staircase { steps },
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Domain(format!("annealing time must be positive, got {}", self.tau)));
        }
        if !(self.gamma0 >= 0.0 && self.gamma0.is_finite()) {
            return Err(Error::Domain(format!(
                "initial field must be non-negative, got {}",
                self.gamma0
            )));
        }
        Ok(())
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn form(&self) -> ScheduleForm {
        self.form
    }

    /// `Gamma(t)` for `0 <= t <= tau`.
    pub fn gamma_at(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0 && t <= self.tau) {
            return Err(Error::Domain(format!("time {t} outside [0, {}]", self.tau)));
        }
        Ok(self.gamma_clamped(t))
    }

    /// `Gamma(t)` with `t` clamped into `[0, tau]`.
    pub fn gamma_clamped(&self, t: f64) -> f64 {
        let x = (t / self.tau).clamp(0.0, 1.0);
        match self.form {
            ScheduleForm::Linear => self.gamma0 * (1.0 - x),
            ScheduleForm::Staircase { steps } => {
                let n = steps as f64;
                self.gamma0 * (1.0 - (x * n).floor() / n)
            }
        }
    }
}

pub fn schedule_gamma(s: &Schedule, t: f64) -> Result<f64> {
    s.gamma_at(t)
}
