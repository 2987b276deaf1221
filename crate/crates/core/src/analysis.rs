//! Fits on annealing output: the effective-temperature Ansatz, power laws
//! and the logarithmic law `eps = [log(gamma tau)]^(-xi)`.

use serde::{Deserialize, Serialize};

use crate::annealing::TrajectoryRecord;
use crate::error::{Error, Result};
use crate::fermion::ThermalCurveFactory;
use crate::instances::Instance;

/// Fitted quantity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitParameter {
    Teff { value: f64 },
    Exponent { value: f64 },
    LogLaw { gamma: f64, xi: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub parameter: FitParameter,
    /// One standard error per fitted number, in the order of `parameter`.
    pub stderr: Vec<f64>,
    /// Range of the abscissa (field or annealing time) actually used.
    pub window: (f64, f64),
    /// Relative root-mean-square residual.
    pub residual_rms: f64,
    pub n_points: usize,
}

impl FitResult {
    /// The single fitted number of a T_eff or exponent fit.
    pub fn value(&self) -> f64 {
        match self.parameter {
            FitParameter::Teff { value } | FitParameter::Exponent { value } => value,
            FitParameter::LogLaw { xi, .. } => xi,
        }
    }
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Minimizes `f` on `[a, b]`; `f` is assumed unimodal there.
fn golden_section(mut a: f64, mut b: f64, tol: f64, f: &mut impl FnMut(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..200 {
        if (b - a).abs() <= tol * (1.0 + c.abs().max(d.abs())) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

/// Grid scan followed by golden-section refinement around the best node.
/// Returns `(argmin, min, at_edge)` where `at_edge` flags a minimum on the
/// first or last node.
fn scan_and_refine(
    lo: f64,
    hi: f64,
    nodes: usize,
    tol: f64,
    f: &mut impl FnMut(f64) -> Result<f64>,
) -> Result<(f64, f64, bool)> {
    let xs: Vec<f64> = (0..nodes).map(|k| lo + (hi - lo) * k as f64 / (nodes - 1) as f64).collect();
    let mut vals = Vec::with_capacity(nodes);
    for &x in &xs {
        vals.push(f(x)?);
    }
    let best = vals
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .ok_or_else(|| Error::Fit("objective is not finite anywhere on the scan".into()))?;
    let at_edge = best == 0 || best == nodes - 1;
    let a = xs[best.saturating_sub(1)];
    let b = xs[(best + 1).min(nodes - 1)];
    let (x, fx) = golden_section(a, b, tol, f)?;
    if fx <= vals[best] {
        Ok((x, fx, at_edge))
    } else {
        Ok((xs[best], vals[best], at_edge))
    }
}

/// Options for [`fit_teff`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeffOptions {
    /// Field window of the fit.
    pub window: (f64, f64),
    /// Search range of the temperature.
    pub t_range: (f64, f64),
}

impl Default for TeffOptions {
    fn default() -> Self {
        TeffOptions {
            window: (0.0, 1.5),
            t_range: (1e-3, 10.0),
        }
    }
}

fn window_points(records: &[TrajectoryRecord], window: (f64, f64)) -> Vec<(f64, f64)> {
    records
        .iter()
        .filter(|r| r.gamma >= window.0 && r.gamma <= window.1)
        .map(|r| (r.gamma, r.eps_avg))
        .collect()
}

/// Ascending distinct fields of the records inside `window`, merging values
/// closer than `1e-12`.
pub fn window_fields(records: &[TrajectoryRecord], window: (f64, f64)) -> Vec<f64> {
    let mut g: Vec<f64> = window_points(records, window).iter().map(|p| p.0).collect();
    g.sort_by(f64::total_cmp);
    g.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    g
}

/// Curve factory on exactly the fields a trajectory visits, so the fit
/// never interpolates.
pub fn teff_factory(inst: &Instance, records: &[TrajectoryRecord], window: (f64, f64)) -> Result<ThermalCurveFactory> {
    let grid = window_fields(records, window);
    if grid.is_empty() {
        return Err(Error::Validation(format!("no records in field window {window:?}")));
    }
    ThermalCurveFactory::new(inst, &grid)
}

/// Least-squares `T_eff` of the Ansatz `eps_res(t) = eps_c(Gamma(t), T_eff)`
/// using the `eps_avg` column of `records`.
pub fn fit_teff(records: &[TrajectoryRecord], factory: &ThermalCurveFactory, opts: &TeffOptions) -> Result<FitResult> {
    let pts = window_points(records, opts.window);
    if pts.len() < 2 {
        return Err(Error::Validation(format!(
            "need at least 2 records in field window {:?}, got {}",
            opts.window,
            pts.len()
        )));
    }
    let gmin = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let gmax = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if gmax - gmin < 0.5 {
        return Err(Error::Validation(format!(
            "trajectory spans fields [{gmin}, {gmax}], narrower than 0.5"
        )));
    }
    let (t_lo, t_hi) = opts.t_range;
    if !(t_lo > 0.0 && t_hi > t_lo) {
        return Err(Error::Validation(format!("bad temperature range {:?}", opts.t_range)));
    }
    let mut objective = |log_t: f64| -> Result<f64> {
        let curve = factory.curve(log_t.exp())?;
        let mut s = 0.0;
        for &(g, e) in &pts {
            let r = e - curve.value_at(g)?;
            s += r * r;
        }
        Ok(s)
    };
    let mut lo = t_lo.ln();
    let mut hi = t_hi.ln();
    let mut found = None;
    for _attempt in 0..2 {
        let (x, fx, at_edge) = scan_and_refine(lo, hi, 41, 1e-12, &mut objective)?;
        if !at_edge {
            found = Some((x, fx));
            break;
        }
        // widen by a decade on both sides and try once more
        lo -= std::f64::consts::LN_10;
        hi += std::f64::consts::LN_10;
    }
    let (log_t, f_min) = found.ok_or_else(|| {
        Error::Fit(format!(
            "effective temperature not bracketed in [{:.3e}, {:.3e}]",
            lo.exp(),
            hi.exp()
        ))
    })?;
    let t_eff = log_t.exp();
    // curvature in T for the 1-sigma error: var = 2 s^2 / f''
    let h = 1e-3 * t_eff;
    let obj_t = |t: f64| objective(t.ln());
    let f_plus = obj_t(t_eff + h)?;
    let f_minus = obj_t(t_eff - h)?;
    let curvature = (f_plus - 2.0 * f_min + f_minus) / (h * h);
    let n = pts.len();
    let s2 = f_min / (n as f64 - 1.0);
    let stderr = if curvature > 0.0 { (2.0 * s2 / curvature).sqrt() } else { f64::INFINITY };
    let norm: f64 = pts.iter().map(|p| p.1 * p.1).sum();
    Ok(FitResult {
        parameter: FitParameter::Teff { value: t_eff },
        stderr: vec![stderr],
        window: (gmin, gmax),
        residual_rms: if norm > 0.0 { (f_min / norm).sqrt() } else { 0.0 },
        n_points: n,
    })
}

/// Geometric central decade of the given abscissae.
pub fn central_decade(taus: &[f64]) -> (f64, f64) {
    let lo = taus.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = taus.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let c = (lo * hi).sqrt();
    let half = 10f64.sqrt();
    (c / half, c * half)
}

fn select(points: &[(f64, f64)], window: (f64, f64)) -> Vec<(f64, f64)> {
    points
        .iter()
        .copied()
        .filter(|(t, _)| *t >= window.0 && *t <= window.1)
        .collect()
}

/// Slope of `log eps` against `log tau` over `window`.
pub fn fit_power_law(points: &[(f64, f64)], window: (f64, f64)) -> Result<FitResult> {
    let pts = select(points, window);
    if pts.len() < 3 {
        return Err(Error::Validation(format!(
            "power-law fit needs at least 3 points in {window:?}, got {}",
            pts.len()
        )));
    }
    if let Some(&(t, e)) = pts.iter().find(|(t, e)| !(*e > 0.0 && *t > 0.0)) {
        return Err(Error::Validation(format!("non-positive point ({t}, {e}) in fit window")));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Validation("all points share one abscissa".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let stderr = (ssr / (n - 2.0) / sxx).sqrt();
    let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(FitResult {
        parameter: FitParameter::Exponent { value: slope },
        stderr: vec![stderr],
        window: (lo, hi),
        residual_rms: (ssr / n).sqrt(),
        n_points: pts.len(),
    })
}

/// Fits `eps = [log(gamma tau)]^(-xi)` by least squares on `log eps`. For a
/// given `g = log gamma` the best `xi` is linear, so the search is over `g`
/// alone, parametrized by `u = log(g + log tau_min)`.
pub fn fit_log_law(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.len() < 5 {
        return Err(Error::Validation(format!(
            "log-law fit needs at least 5 points, got {}",
            points.len()
        )));
    }
    if let Some(&(t, e)) = points.iter().find(|(t, e)| !(*e > 0.0 && *t > 0.0)) {
        return Err(Error::Validation(format!("non-positive point ({t}, {e})")));
    }
    let lt: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let lt_min = lt.iter().copied().fold(f64::INFINITY, f64::min);
    let xi_for = |g: f64| -> (f64, f64) {
        let mut sxy = 0.0;
        let mut sxx = 0.0;
        for (l, y) in lt.iter().zip(&ys) {
            let x = (g + l).ln();
            sxy += x * y;
            sxx += x * x;
        }
        let xi = -sxy / sxx;
        let ssr = lt
            .iter()
            .zip(&ys)
            .map(|(l, y)| {
                let r = y + xi * (g + l).ln();
                r * r
            })
            .sum();
        (xi, ssr)
    };
    let g_of = |u: f64| u.exp() - lt_min;
    let mut objective = |u: f64| -> Result<f64> { Ok(xi_for(g_of(u)).1) };
    let (u, ssr, at_edge) = scan_and_refine(-12.0, 6.0, 721, 1e-14, &mut objective)?;
    let g = g_of(u);
    let (xi, _) = xi_for(g);
    if at_edge {
        return Err(Error::Fit(format!(
            "log-law fit did not converge; best candidate gamma = {:.6e}, xi = {xi:.6}",
            g.exp()
        )));
    }
    // standard errors from the Jacobian of the residuals in (g, xi)
    let n = points.len() as f64;
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for l in &lt {
        let dg = xi / (g + l);
        let dxi = (g + l).ln();
        a += dg * dg;
        b += dg * dxi;
        c += dxi * dxi;
    }
    let det = a * c - b * b;
    let s2 = ssr / (n - 2.0);
    let (se_g, se_xi) = if det > 0.0 {
        ((s2 * c / det).sqrt(), (s2 * a / det).sqrt())
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    let gamma = g.exp();
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(FitResult {
        parameter: FitParameter::LogLaw { gamma, xi },
        stderr: vec![gamma * se_g, se_xi],
        window: (lo, hi),
        residual_rms: (ssr / n).sqrt(),
        n_points: points.len(),
    })
}
