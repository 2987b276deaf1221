//! Coherent annealing by time-dependent Bogoliubov-de Gennes equations.
//!
//! The state is the frame of occupied Bogoliubov modes `X = (u; v)`
//! (`2L x L`, orthonormal columns) evolving as `i dX/dt = M(Gamma(t)) X`.
//! The integrator works on the same frame written in Majorana coordinates,
//! `Y = (Y_a; Y_b)` with `Y_a = (u + v)/sqrt 2`, `Y_b = -i (u - v)/sqrt 2`, where
//! the generator becomes the real sparse matrix
//!
//! ```text
//! dY/dt = h Y,    h = [[0, 2D], [-2D^T, 0]]
//! ```
//!
//! Real and imaginary parts of `Y` then evolve independently, and classical
//! RK4 applied in either basis produces the same iterates.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{residual_from_correlations, ChainModes};
use crate::annealing::{Schedule, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::instances::Instance;

/// Orthonormality drift above which a run is aborted.
pub const MAX_FRAME_DEFECT: f64 = 1e-6;

/// Bogoliubov amplitudes of the evolving state.
#[derive(Clone, Debug)]
pub struct BdgState {
    pub u: DMatrix<Complex64>,
    pub v: DMatrix<Complex64>,
    pub t: f64,
}

impl BdgState {
    /// Ground state of the chain at field `gamma`.
    pub fn ground_state(inst: &Instance, gamma: f64) -> Result<Self> {
        Ok(MajoranaFrame::ground_state(&ChainModes::new(inst, gamma)?).to_state(0.0))
    }

    /// `max |u+u + v+v - 1|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.u.adjoint() * &self.u + self.v.adjoint() * &self.v;
        let n = g.nrows();
        let mut worst = 0.0f64;
        for c in 0..n {
            for r in 0..n {
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((g[(r, c)] - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// `<sz_i sz_{i+1}>` in this state.
    pub fn bond_correlations(&self) -> Vec<f64> {
        MajoranaFrame::from_state(self).bond_correlations()
    }

    /// `(1/L) sum_i J_i (1 - <sz_i sz_{i+1}>)`.
    pub fn residual_energy(&self, inst: &Instance) -> f64 {
        residual_from_correlations(inst.couplings(), &self.bond_correlations())
    }
}

/// `Y` stored row-major: rows `a_1..a_L, b_1..b_L`, each row holding the
/// real parts of the `L` columns followed by the imaginary parts.
#[derive(Clone, Debug)]
struct MajoranaFrame {
    l: usize,
    z: Vec<f64>,
}

impl MajoranaFrame {
    fn width(&self) -> usize {
        2 * self.l
    }

    fn row(&self, r: usize) -> &[f64] {
        let w = self.width();
        &self.z[r * w..(r + 1) * w]
    }

    fn ground_state(modes: &ChainModes) -> Self {
        let l = modes.length();
        let w = 2 * l;
        let mut z = vec![0.0; 2 * l * w];
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for j in 0..l {
            for k in 0..l {
                z[j * w + k] = modes.left()[(j, k)] * s;
                z[(l + j) * w + l + k] = -modes.right()[(j, k)] * s;
            }
        }
        MajoranaFrame { l, z }
    }

    fn from_state(state: &BdgState) -> Self {
        let l = state.u.nrows();
        let w = 2 * l;
        let mut z = vec![0.0; 2 * l * w];
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for j in 0..l {
            for k in 0..l {
                let (u, v) = (state.u[(j, k)], state.v[(j, k)]);
                let a = (u + v) * s;
                let b = Complex64::new(0.0, -1.0) * (u - v) * s;
                z[j * w + k] = a.re;
                z[j * w + l + k] = a.im;
                z[(l + j) * w + k] = b.re;
                z[(l + j) * w + l + k] = b.im;
            }
        }
        MajoranaFrame { l, z }
    }

    fn to_state(&self, t: f64) -> BdgState {
        let l = self.l;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut u = DMatrix::<Complex64>::zeros(l, l);
        let mut v = DMatrix::<Complex64>::zeros(l, l);
        for j in 0..l {
            let (ra, rb) = (self.row(j), self.row(l + j));
            for k in 0..l {
                let a = Complex64::new(ra[k], ra[l + k]);
                let b = Complex64::new(rb[k], rb[l + k]);
                let ib = Complex64::new(0.0, 1.0) * b;
                u[(j, k)] = (a + ib) * s;
                v[(j, k)] = (a - ib) * s;
            }
        }
        BdgState { u, v, t }
    }

    fn bond_correlations(&self) -> Vec<f64> {
        let l = self.l;
        (0..l - 1)
            .map(|i| {
                let a = self.row(i + 1);
                let b = self.row(l + i);
                let (are, aim) = a.split_at(l);
                let (bre, bim) = b.split_at(l);
                let mut acc = 0.0;
                for k in 0..l {
                    acc += are[k] * bim[k] - aim[k] * bre[k];
                }
                2.0 * acc
            })
            .collect()
    }

    fn defect(&self) -> f64 {
        let l = self.l;
        let re = DMatrix::<f64>::from_fn(2 * l, l, |r, c| self.z[r * 2 * l + c]);
        let im = DMatrix::<f64>::from_fn(2 * l, l, |r, c| self.z[r * 2 * l + l + c]);
        let mut g_re = re.tr_mul(&re);
        g_re += im.tr_mul(&im);
        let g_im = re.tr_mul(&im) - im.tr_mul(&re);
        let mut worst = 0.0f64;
        for c in 0..l {
            for r in 0..l {
                let d = g_re[(r, c)] - if r == c { 1.0 } else { 0.0 };
                worst = worst.max(d.hypot(g_im[(r, c)]));
            }
        }
        worst
    }
}

/// Writes row `r` of `h(gamma) * src` into `out`; `src` is row-major with
/// `w` columns.
#[inline]
fn generator_row(l: usize, couplings: &[f64], gamma: f64, src: &[f64], w: usize, r: usize, out: &mut [f64]) {
    let row = |q: usize| &src[q * w..(q + 1) * w];
    if r < l {
        // a_j' = 2 (D b)_j = -2 Gamma b_j - 2 J_{j-1} b_{j-1}
        let j = r;
        let bj = row(l + j);
        let g2 = -2.0 * gamma;
        if j > 0 {
            let bp = row(l + j - 1);
            let c = -2.0 * couplings[j - 1];
            for ((o, x), y) in out.iter_mut().zip(bj).zip(bp) {
                *o = g2 * x + c * y;
            }
        } else {
            for (o, x) in out.iter_mut().zip(bj) {
                *o = g2 * x;
            }
        }
    } else {
        // b_j' = -2 (D^T a)_j = 2 Gamma a_j + 2 J_j a_{j+1}
        let j = r - l;
        let aj = row(j);
        let g2 = 2.0 * gamma;
        if j + 1 < l {
            let an = row(j + 1);
            let c = 2.0 * couplings[j];
            for ((o, x), y) in out.iter_mut().zip(aj).zip(an) {
                *o = g2 * x + c * y;
            }
        } else {
            for (o, x) in out.iter_mut().zip(aj) {
                *o = g2 * x;
            }
        }
    }
}

/// Columns integrated together; a block of the frame stays in cache for all
/// four stages.
const BLOCK: usize = 16;

/// Fixed-step RK4 stepper for the Bogoliubov frame.
pub struct BdgIntegrator<'a> {
    couplings: &'a [f64],
    frame: MajoranaFrame,
    block: Vec<f64>,
    stage_a: Vec<f64>,
    stage_b: Vec<f64>,
    acc: Vec<f64>,
    k: Vec<f64>,
    t: f64,
}

impl<'a> BdgIntegrator<'a> {
    /// Starts from the ground state at `gamma0`.
    pub fn new(inst: &'a Instance, gamma0: f64) -> Result<Self> {
        let frame = MajoranaFrame::ground_state(&ChainModes::new(inst, gamma0)?);
        let n = frame.width() * BLOCK.min(frame.width());
        Ok(BdgIntegrator {
            couplings: inst.couplings(),
            frame,
            block: vec![0.0; n],
            stage_a: vec![0.0; n],
            stage_b: vec![0.0; n],
            acc: vec![0.0; n],
            k: vec![0.0; BLOCK],
            t: 0.0,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> BdgState {
        self.frame.to_state(self.t)
    }

    pub fn bond_correlations(&self) -> Vec<f64> {
        self.frame.bond_correlations()
    }

    pub fn residual_energy(&self) -> f64 {
        residual_from_correlations(self.couplings, &self.frame.bond_correlations())
    }

    pub fn orthonormality_defect(&self) -> f64 {
        self.frame.defect()
    }

    /// One RK4 step of length `dt`, with the field sampled at `t`,
    /// `t + dt/2` and `t + dt`.
    pub fn step(&mut self, dt: f64, field: &impl Fn(f64) -> f64) {
        let l = self.frame.l;
        let w = 2 * l;
        let t = self.t;
        let fields = [field(t), field(t + 0.5 * dt), field(t + dt)];
        let mut c0 = 0;
        while c0 < w {
            let b = BLOCK.min(w - c0);
            let n = w * b;
            for r in 0..w {
                self.block[r * b..(r + 1) * b].copy_from_slice(&self.frame.z[r * w + c0..r * w + c0 + b]);
            }
            rk4_block(
                l,
                self.couplings,
                fields,
                dt,
                b,
                &mut self.block[..n],
                &mut self.stage_a[..n],
                &mut self.stage_b[..n],
                &mut self.acc[..n],
                &mut self.k[..b],
            );
            for r in 0..w {
                self.frame.z[r * w + c0..r * w + c0 + b].copy_from_slice(&self.block[r * b..(r + 1) * b]);
            }
            c0 += b;
        }
        self.t += dt;
    }
}

/// RK4 on a `2L x b` block of frame columns.
#[allow(clippy::too_many_arguments)]
fn rk4_block(
    l: usize,
    couplings: &[f64],
    [g0, g1, g2]: [f64; 3],
    dt: f64,
    b: usize,
    z: &mut [f64],
    stage_a: &mut [f64],
    stage_b: &mut [f64],
    acc: &mut [f64],
    k: &mut [f64],
) {
    let rows = 2 * l;
    for r in 0..rows {
        generator_row(l, couplings, g0, z, b, r, k);
        let range = r * b..(r + 1) * b;
        for ((a, s), (zz, kk)) in acc[range.clone()]
            .iter_mut()
            .zip(&mut stage_a[range.clone()])
            .zip(z[range].iter().zip(k.iter()))
        {
            *a = *kk;
            *s = zz + 0.5 * dt * kk;
        }
    }
    for r in 0..rows {
        generator_row(l, couplings, g1, stage_a, b, r, k);
        let range = r * b..(r + 1) * b;
        for ((a, s), (zz, kk)) in acc[range.clone()]
            .iter_mut()
            .zip(&mut stage_b[range.clone()])
            .zip(z[range].iter().zip(k.iter()))
        {
            *a += 2.0 * kk;
            *s = zz + 0.5 * dt * kk;
        }
    }
    for r in 0..rows {
        generator_row(l, couplings, g1, stage_b, b, r, k);
        let range = r * b..(r + 1) * b;
        for ((a, s), (zz, kk)) in acc[range.clone()]
            .iter_mut()
            .zip(&mut stage_a[range.clone()])
            .zip(z[range].iter().zip(k.iter()))
        {
            *a += 2.0 * kk;
            *s = zz + dt * kk;
        }
    }
    let sixth = dt / 6.0;
    for r in 0..rows {
        generator_row(l, couplings, g2, stage_a, b, r, k);
        let range = r * b..(r + 1) * b;
        for (zz, (a, kk)) in z[range.clone()].iter_mut().zip(acc[range].iter().zip(k.iter())) {
            *zz += sixth * (a + kk);
        }
    }
}

/// Integration controls for coherent annealing.
#[derive(Clone, Debug)]
pub struct QaOptions {
    /// Step size; `None` selects [`default_time_step`].
    pub dt: Option<f64>,
    /// Number of output intervals; records are emitted at `t = 0` and at
    /// `records` evenly spaced times ending at the final time.
    pub records: usize,
}

impl Default for QaOptions {
    fn default() -> Self {
        QaOptions {
            dt: None,
            records: 200,
        }
    }
}

/// `min(1e-2, tau / 1e5)`.
pub fn default_time_step(tau: f64) -> f64 {
    (1e-2f64).min(tau / 1e5)
}

/// Largest step, at most `1e-2`, for which the RK4 norm loss along
/// `schedule` should stay below a quarter of [`MAX_FRAME_DEFECT`].
///
/// RK4 shrinks a mode of frequency `w` by `(w dt)^6 / 144` per step, so the
/// defect after time `tau` is about `tau dt^5 <w^6> / 72`, with `w` bounded
/// by `2 (Gamma + max J)`.
pub fn drift_limited_time_step(inst: &Instance, schedule: &Schedule) -> f64 {
    let tau = schedule.tau();
    let j_max = inst.couplings().iter().copied().fold(0.0, f64::max);
    let n = 1000;
    let mean_w6 = (0..n)
        .map(|k| {
            let g = schedule.gamma_clamped(tau * (k as f64 + 0.5) / n as f64);
            (2.0 * (g + j_max)).powi(6)
        })
        .sum::<f64>()
        / n as f64;
    let budget = 0.25 * MAX_FRAME_DEFECT;
    let dt = (72.0 * budget / (tau * mean_w6)).powf(0.2);
    dt.min(1e-2)
}

/// Evolves the ground state at `field(0)` for a time `duration` and records
/// the residual energy. Fails if the frame drifts from orthonormality by
/// more than [`MAX_FRAME_DEFECT`].
pub fn evolve_field_profile(
    inst: &Instance,
    field: impl Fn(f64) -> f64,
    duration: f64,
    opts: &QaOptions,
) -> Result<Vec<TrajectoryRecord>> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::Domain(format!("annealing time must be positive, got {duration}")));
    }
    let dt_req = opts.dt.unwrap_or_else(|| default_time_step(duration));
    if !(dt_req > 0.0 && dt_req.is_finite()) {
        return Err(Error::Domain(format!("time step must be positive, got {dt_req}")));
    }
    if opts.records == 0 {
        return Err(Error::Domain("need at least one output record".into()));
    }
    let n_steps = ((duration / dt_req) - 1e-9).ceil().max(1.0) as u64;
    let dt = duration / n_steps as f64;

    let mut stepper = BdgIntegrator::new(inst, field(0.0))?;
    let emit_at = |j: usize| -> u64 {
        ((j as f64) * n_steps as f64 / opts.records as f64).round() as u64
    };
    let mut records = Vec::with_capacity(opts.records + 1);
    let mut next = 0usize;
    let mut step = 0u64;
    loop {
        while next <= opts.records && emit_at(next) == step {
            next += 1;
            let t = if step == n_steps { duration } else { step as f64 * dt };
            if records.last().is_some_and(|r: &TrajectoryRecord| r.t == t) {
                continue;
            }
            let defect = stepper.orthonormality_defect();
            if defect > MAX_FRAME_DEFECT {
                return Err(Error::Accuracy(format!(
                    "Bogoliubov frame lost orthonormality ({defect:.2e}) at t = {t}; reduce dt (now {dt})"
                )));
            }
            let eps = stepper.residual_energy();
            records.push(TrajectoryRecord::coherent(t, field(t), eps));
        }
        if step == n_steps {
            break;
        }
        stepper.step(dt, &field);
        step += 1;
    }
    Ok(records)
}

/// Coherent annealing along `schedule`; the last record is
/// `eps_res(tau)`.
pub fn coherent_qa_evolve(
    inst: &Instance,
    schedule: &Schedule,
    opts: &QaOptions,
) -> Result<Vec<TrajectoryRecord>> {
    schedule.validate()?;
    evolve_field_profile(inst, |t| schedule.gamma_clamped(t), schedule.tau(), opts)
}
