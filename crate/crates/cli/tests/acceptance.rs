//! Acceptance criteria. Every test prints one `PASS` or `FAIL` line on
//! stderr, outside the test harness capture, and then asserts it.
//!
//! The paper-scale sampling-crisis run takes hours and is ignored by
//! default: `cargo test --release -p sqa-cli --test acceptance -- --ignored`.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::io::Write;
use std::path::Path;
use std::sync::{Mutex, MutexGuard};
use std::time::Instant;

use sqa_cli::args::FigureId;
use sqa_cli::commands::{read_scaling, read_trajectory};
use sqa_cli::figures::{run_figure_pipeline, FigureConfig};
use sqa_cli::table::ColumnTable;
use sqa_cli::Context;
use sqa_core::analysis::{fit_log_law, fit_power_law, fit_teff, teff_factory, TeffOptions};
use sqa_core::annealing::{Schedule, TrajectoryRecord};
use sqa_core::fermion::{
    coherent_qa_evolve, equilibrium_eps_c, BdgIntegrator, QaOptions, ThermalCurveFactory,
};
use sqa_core::instances::{generate_instance, Distribution, Instance};
use sqa_core::pimc::exhaustive::transition_matrix;
use sqa_core::pimc::{equilibrium_run, j_perp, MoveFamily, PimcParams};
use sqa_core::rng::chain_rng;
use tempfile::TempDir;

// criteria run one at a time so the runtime limits see an idle machine
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(name: &str, pass: bool, detail: &str) {
    let line = format!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    let _ = writeln!(std::io::stderr().lock(), "{line}");
    assert!(pass, "{line}");
}

fn context(dir: &Path) -> Context {
    Context::new(dir, 1, rayon::current_num_threads())
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    ColumnTable::read(path).unwrap().numbers(name, path).unwrap()
}

#[test]
fn equilibrium_oracle() {
    let _serial = serial();
    let start = Instant::now();
    let mut chains: Vec<Instance> = (2..=8)
        .map(|l| generate_instance(l, Distribution::Uniform01, 100 + l as u64).unwrap())
        .collect();
    chains.push(generate_instance(8, Distribution::Ordered(1.0), 0).unwrap());
    let mut worst: f64 = 0.0;
    for inst in &chains {
        for gamma in [0.0, 0.1, (-1f64).exp(), 1.0] {
            for temp in [0.01, 0.1, 1.0] {
                let got = equilibrium_eps_c(inst, gamma, temp).unwrap();
                let want = common::dense_eps_c(inst.couplings(), gamma, temp);
                worst = worst.max((got - want).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        "equilibrium oracle (L <= 8, 12 (Gamma, T) points)",
        worst < 1e-10 && secs < 60.0,
        &format!("max |exact - dense| = {worst:.1e}, {secs:.1} s"),
    );
}

fn stationarity_defect(t: &[Vec<f64>], pi: &[f64]) -> f64 {
    (0..pi.len())
        .map(|b| {
            let flow: f64 = (0..pi.len()).map(|a| pi[a] * t[a][b]).sum();
            (flow - pi[b]).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn pimc_oracle() {
    let _serial = serial();
    let start = Instant::now();
    let inst = generate_instance(4, Distribution::Uniform01, 7).unwrap();
    let (temp, gamma, p) = (1.0, 1.0, 3);
    let beta_p = 1.0 / (temp * p as f64);
    let jp = j_perp(beta_p, gamma).unwrap();
    let exact = common::exhaustive_eps_avg(inst.couplings(), p, beta_p, jp);
    let mut details = vec![format!("exhaustive {exact:.6}")];
    let mut pass = true;
    for (k, moves) in MoveFamily::ALL.into_iter().enumerate() {
        let params = PimcParams::new(temp, gamma, p, moves, 1_000_000).unwrap();
        let mut rng = chain_rng(2024, k as u64);
        let est = equilibrium_run(&inst, &params, &mut rng).unwrap();
        let z = (est.eps_c - exact) / est.stderr;
        pass &= z.abs() < 3.0;
        details.push(format!("{moves} {:.6} +- {:.1e} ({z:+.2} sigma)", est.eps_c, est.stderr));
    }
    let mut worst: f64 = 0.0;
    for (j, t, g) in [(1.0, 1.0, 1.0), (0.4, 0.3, 0.2), (0.9, 2.0, 3.0)] {
        let bp = 1.0 / (t * 2.0);
        let pi = common::boltzmann_weights(&[j], 2, bp, j_perp(bp, g).unwrap());
        for moves in MoveFamily::ALL {
            let tm = transition_matrix(&[j], t, 2, g, moves).unwrap();
            worst = worst.max(stationarity_defect(&tm, &pi));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= worst < 1e-12 && secs < 60.0 * MoveFamily::ALL.len() as f64;
    details.push(format!("2x2 stationarity defect {worst:.1e}"));
    details.push(format!("{secs:.0} s"));
    report("PIMC oracle (L=4, P=3, 1e6 MCS per family)", pass, &details.join(", "));
}

#[test]
fn dynamics_oracle() {
    let _serial = serial();
    let mut worst_dense: f64 = 0.0;
    let mut worst_half: f64 = 0.0;
    let mut worst_drift: f64 = 0.0;
    for (l, seed, tau) in [(4, 1, 3.0), (6, 2, 5.0), (8, 3, 4.0)] {
        let inst = generate_instance(l, Distribution::Uniform01, seed).unwrap();
        let schedule = Schedule::linear(2.5, tau).unwrap();
        let dt = 1e-3;
        let recs = coherent_qa_evolve(&inst, &schedule, &QaOptions { dt: Some(dt), records: 20 }).unwrap();
        let dense = common::dense_schrodinger_ramp(inst.couplings(), 2.5, tau, dt, 20);
        for (r, (_, e)) in recs.iter().zip(&dense) {
            worst_dense = worst_dense.max((r.eps_avg - e).abs());
        }
        let half = coherent_qa_evolve(&inst, &schedule, &QaOptions { dt: Some(dt / 2.0), records: 20 }).unwrap();
        for (a, b) in recs.iter().zip(&half) {
            worst_half = worst_half.max((a.eps_avg - b.eps_avg).abs());
        }
        let mut stepper = BdgIntegrator::new(&inst, 2.5).unwrap();
        let n = (tau / dt).round() as usize;
        for _ in 0..n {
            stepper.step(dt, &|t| schedule.gamma_clamped(t));
        }
        worst_drift = worst_drift.max(stepper.orthonormality_defect());
    }
    report(
        "dynamics oracle (L <= 8)",
        worst_dense < 1e-6 && worst_half < 1e-6 && worst_drift < 1e-6,
        &format!("max |fermion - dense| = {worst_dense:.1e}, dt-halving {worst_half:.1e}, unitarity drift {worst_drift:.1e}"),
    );
}

#[test]
fn analysis_self_tests() {
    let _serial = serial();
    // power law
    let pts: Vec<(f64, f64)> = (0..9).map(|k| 10f64.powf(k as f64 / 2.0)).map(|t| (t, 0.7 * t.powf(-0.42))).collect();
    let pl = fit_power_law(&pts, (1.0, 1e4)).unwrap();
    let pl_err = (pl.value() + 0.42).abs();

    // planted effective temperature on a disordered chain
    let inst = generate_instance(32, Distribution::Uniform01, 5).unwrap();
    let gammas: Vec<f64> = (0..=150).map(|k| 0.01 * k as f64).collect();
    let planted = 0.137;
    let curve = ThermalCurveFactory::new(&inst, &gammas).unwrap().curve(planted).unwrap();
    let records: Vec<TrajectoryRecord> = curve
        .gammas()
        .iter()
        .zip(curve.values())
        .enumerate()
        .map(|(k, (&g, &e))| TrajectoryRecord::coherent(k as f64, g, e))
        .collect();
    let opts = TeffOptions {
        window: (0.0, 1.5),
        t_range: (1e-3, 10.0),
    };
    let factory = teff_factory(&inst, &records, opts.window).unwrap();
    let teff = fit_teff(&records, &factory, &opts).unwrap();
    let teff_err = (teff.value() - planted).abs();

    // planted logarithmic law
    let (g0, xi0) = (3.0, 1.7);
    let pts: Vec<(f64, f64)> = (0..12)
        .map(|k| 10f64.powf(k as f64 / 2.0))
        .map(|t: f64| (t, (g0 * t).ln().powf(-xi0)))
        .collect();
    let ll = fit_log_law(&pts).unwrap();
    let (g, xi) = match ll.parameter {
        sqa_core::analysis::FitParameter::LogLaw { gamma, xi } => (gamma, xi),
        other => panic!("unexpected {other:?}"),
    };
    let ll_err = ((g - g0).abs() / g0).max((xi - xi0).abs());
    report(
        "analysis self-tests",
        pl_err < 1e-12 && teff_err < 1e-6 && ll_err < 1e-6,
        &format!("power-law exponent error {pl_err:.1e}, T_eff error {teff_err:.1e}, log-law error {ll_err:.1e}"),
    );
}

struct Curve {
    trotter: Vec<f64>,
    eps: Vec<f64>,
    err: Vec<f64>,
}

fn pimc_curve(path: &Path) -> Curve {
    Curve {
        trotter: column(path, "P"),
        eps: column(path, "eps_c_est"),
        err: column(path, "stderr"),
    }
}

#[test]
fn equilibrium_convergence_desk_scale() {
    let _serial = serial();
    let start = Instant::now();
    let dir = TempDir::new().unwrap();
    let mut cfg = FigureConfig::preset(FigureId::Fig1, true);
    if let FigureConfig::Fig1(c) = &mut cfg {
        c.gammas = vec![1.0];
    }
    let FigureConfig::Fig1(c) = &cfg else { unreachable!() };
    let run = run_figure_pipeline(&cfg, None, &context(dir.path())).unwrap();
    assert!(run.failures.is_empty(), "{:?}", run.failures);
    let inst = cfg.default_instance().unwrap();
    let exact = equilibrium_eps_c(&inst, 1.0, c.temp).unwrap();
    let mut pass = true;
    let mut details = Vec::new();
    let mut ratios = Vec::new();
    for moves in &c.moves {
        let cv = pimc_curve(&dir.path().join(format!("fig1_gamma1_{moves}.csv")));
        let last = cv.eps.len() - 1;
        let below = cv.eps.iter().zip(&cv.err).all(|(e, s)| *e < exact + 3.0 * s);
        let mut shrinking = true;
        for k in 0..last {
            let (b1, b2) = (exact - cv.eps[k], exact - cv.eps[k + 1]);
            let s = (cv.err[k].powi(2) + cv.err[k + 1].powi(2)).sqrt();
            shrinking &= b2 < b1 + 3.0 * s;
            // asymptotic regime (slice width beta/P at most 1) with the
            // smaller bias resolved to 10%
            let asymptotic = cv.trotter[k] * c.temp >= 1.0;
            if cv.trotter[k + 1] == 2.0 * cv.trotter[k] && asymptotic && b2 > 10.0 * s {
                ratios.push((moves.to_string(), cv.trotter[k], b1 / b2));
            }
        }
        let final_bias = exact - cv.eps[last];
        let converged = final_bias.abs() < 3.0 * cv.err[last] || final_bias.abs() < 0.01 * exact;
        pass &= below && shrinking && converged;
        details.push(format!(
            "{moves}: P={} {:.5} +- {:.1e} (below {below}, shrinking {shrinking})",
            cv.trotter[last], cv.eps[last], cv.err[last]
        ));
    }
    let ratio_ok = !ratios.is_empty() && ratios.iter().all(|r| (3.0..=5.0).contains(&r.2));
    pass &= ratio_ok;
    let secs = start.elapsed().as_secs_f64();
    pass &= secs <= 1800.0;
    let rs: Vec<String> = ratios.iter().map(|r| format!("{} P={}: {:.2}", r.0, r.1, r.2)).collect();
    report(
        "equilibrium convergence, desk scale (L=64, Gamma=1, T=0.1)",
        pass,
        &format!("exact {exact:.5}; {}; bias ratios P/2P {}; {secs:.0} s", details.join("; "), rs.join(", ")),
    );
}

#[test]
#[ignore = "paper scale, several hours"]
fn sampling_crisis_paper_scale() {
    let _serial = serial();
    let dir = TempDir::new().unwrap();
    let mut cfg = FigureConfig::preset(FigureId::Fig1, false);
    if let FigureConfig::Fig1(c) = &mut cfg {
        c.gammas = vec![0.1];
        c.t_run = 10_000_000;
    }
    let FigureConfig::Fig1(c) = &cfg else { unreachable!() };
    let run = run_figure_pipeline(&cfg, None, &context(dir.path())).unwrap();
    assert!(run.failures.is_empty(), "{:?}", run.failures);
    let inst = cfg.default_instance().unwrap();
    let exact = equilibrium_eps_c(&inst, 0.1, c.temp).unwrap();
    let time = pimc_curve(&dir.path().join("fig1_gamma0.1_time.csv"));
    let sw = pimc_curve(&dir.path().join("fig1_gamma0.1_sw.csv"));
    let dev: Vec<f64> = time.eps.iter().map(|e| (e - exact) / exact).collect();
    let last = dev.len() - 1;
    let overshoot = dev[last] >= 0.5;
    // growing deviation once P passes 64
    let growing = time
        .trotter
        .iter()
        .zip(dev.windows(2))
        .filter(|(p, _)| **p >= 64.0)
        .all(|(_, w)| w[1] > w[0]);
    // space-time moves: within the Richardson estimate of the Trotter bias plus 3 sigma
    let mut sw_ok = true;
    for k in 0..sw.eps.len() {
        let bias = if k + 1 < sw.eps.len() {
            (sw.eps[k] - sw.eps[k + 1]).abs() * 4.0 / 3.0
        } else {
            (sw.eps[k - 1] - sw.eps[k]).abs() / 3.0
        };
        sw_ok &= (sw.eps[k] - exact).abs() <= bias + 3.0 * sw.err[k];
    }
    let devs: Vec<String> = time.trotter.iter().zip(&dev).map(|(p, d)| format!("P={p}: {:+.0}%", 100.0 * d)).collect();
    report(
        "sampling crisis, paper scale (L=256, Gamma=0.1, T=0.01)",
        overshoot && growing && sw_ok,
        &format!("time-cluster deviation {}; space-time agrees: {sw_ok}", devs.join(", ")),
    );
}

#[test]
fn ordered_chain_kz_exponent() {
    let _serial = serial();
    let dir = TempDir::new().unwrap();
    let mut cfg = FigureConfig::preset(FigureId::Fig2, false);
    if let FigureConfig::Fig2(c) = &mut cfg {
        c.taus = vec![10.0, 32.0, 100.0, 316.0, 1000.0];
        c.reps = 8;
        c.window = Some((10.0, 1000.0));
    }
    let run = run_figure_pipeline(&cfg, None, &context(dir.path())).unwrap();
    assert!(run.failures.is_empty(), "{:?}", run.failures);
    let pts = read_scaling(&dir.path().join("fig2_sqa.csv"), "tau", &Some("eps_avg_mean".into())).unwrap();
    let fit = fit_power_law(&pts, (10.0, 1000.0)).unwrap();
    report(
        "ordered-chain KZ exponent (L=256, T=0.01, P=256)",
        (fit.value() + 0.5).abs() <= 0.1,
        &format!("exponent {:.3} +- {:.3} over tau in [10, 1000]", fit.value(), fit.stderr[0]),
    );
}

#[test]
fn spacetime_sqa_saturates() {
    let _serial = serial();
    let dir = TempDir::new().unwrap();
    let mut cfg = FigureConfig::preset(FigureId::Fig3, false);
    if let FigureConfig::Fig3(c) = &mut cfg {
        c.moves = vec![MoveFamily::SpacetimeSw];
        c.trotters = vec![16, 64];
        c.taus = vec![1000.0, 3162.0];
        c.reps = 16;
    }
    let FigureConfig::Fig3(c) = &cfg else { unreachable!() };
    let run = run_figure_pipeline(&cfg, None, &context(dir.path())).unwrap();
    assert!(run.failures.is_empty(), "{:?}", run.failures);
    let inst = cfg.default_instance().unwrap();
    let exact = equilibrium_eps_c(&inst, 0.0, c.temp).unwrap();
    let mut pass = true;
    let mut details = vec![format!("eps_c(0, T) = {exact:.4e}")];
    for p in &c.trotters {
        let path = dir.path().join(format!("fig3b_P{p}.csv"));
        let (taus, eps, sem) = (column(&path, "tau"), column(&path, "eps_avg_mean"), column(&path, "eps_avg_sem"));
        for k in 0..taus.len() {
            let ok = (eps[k] - exact).abs() <= 3.0 * sem[k];
            pass &= ok;
            details.push(format!("P={p} tau={}: {:.4e} +- {:.1e}", taus[k], eps[k], sem[k]));
        }
    }
    report(
        "space-time SQA saturates at the equilibrium value (L=256, T=0.01)",
        pass,
        &details.join(", "),
    );
}

fn teff_rows(path: &Path, source: &str) -> Vec<(f64, f64, f64)> {
    let t = ColumnTable::read(path).unwrap();
    let text = std::fs::read_to_string(path).unwrap();
    let sources: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    let tau = t.numbers("tau", path).unwrap();
    let teff = t.numbers("t_eff", path).unwrap();
    let rms = t.numbers("residual_rms", path).unwrap();
    (0..tau.len())
        .filter(|&k| sources[k] == source)
        .map(|k| (tau[k], teff[k], rms[k]))
        .collect()
}

#[test]
fn effective_temperature_ansatz() {
    let _serial = serial();
    let dir = TempDir::new().unwrap();
    let mut cfg = FigureConfig::preset(FigureId::Fig4, false);
    if let FigureConfig::Fig4(c) = &mut cfg {
        c.reps = 8;
    }
    let run = run_figure_pipeline(&cfg, None, &context(dir.path())).unwrap();
    assert!(run.failures.is_empty(), "{:?}", run.failures);
    let fits = dir.path().join("fig4_teff.csv");
    let mut pass = true;
    let mut details = Vec::new();
    for source in ["sqa", "qa"] {
        let rows = teff_rows(&fits, source);
        let good = rows.iter().filter(|r| r.2 < 0.05).count();
        let monotone = rows.windows(2).all(|w| w[1].1 <= w[0].1);
        pass &= good >= 3 && monotone;
        let rs: Vec<String> = rows
            .iter()
            .map(|r| format!("tau={} T_eff={:.3} rms={:.1}%", r.0, r.1, 100.0 * r.2))
            .collect();
        details.push(format!("{source}: {}", rs.join(", ")));
    }
    // the trajectory files read back into the same fit
    let traj = read_trajectory(&dir.path().join("fig4b_tau100.csv"), &None).unwrap();
    assert!(traj.len() > 50);
    report(
        "effective-temperature Ansatz (L=256, T=0.01, P=1024)",
        pass,
        &details.join("; "),
    );
}

#[test]
fn coherent_and_sqa_exponents_differ() {
    let _serial = serial();
    let dir = TempDir::new().unwrap();
    let qa_window = (3.0, 100.0);
    let sqa_window = (100.0, 3162.0);
    let mut cfg = FigureConfig::preset(FigureId::Fig5, false);
    if let FigureConfig::Fig5(c) = &mut cfg {
        c.qa_taus = vec![1.0, 3.0, 10.0, 32.0, 100.0];
        c.sqa_taus = vec![10.0, 32.0, 100.0, 316.0, 1000.0, 3162.0];
        c.reps = 8;
        c.qa_window = Some(qa_window);
        c.sqa_window = Some(sqa_window);
    }
    let run = run_figure_pipeline(&cfg, None, &context(dir.path())).unwrap();
    assert!(run.failures.is_empty(), "{:?}", run.failures);
    let qa = read_scaling(&dir.path().join("fig5_qa.csv"), "tau", &None).unwrap();
    let sqa = read_scaling(&dir.path().join("fig5_sqa.csv"), "tau", &Some("eps_avg_mean".into())).unwrap();
    let fq = fit_power_law(&qa, qa_window).unwrap();
    let fs = fit_power_law(&sqa, sqa_window).unwrap();
    let (a, sa, b, sb) = (fq.value(), fq.stderr[0], fs.value(), fs.stderr[0]);
    let disjoint = a + 2.0 * sa < b - 2.0 * sb || b + 2.0 * sb < a - 2.0 * sa;
    let pass = (-1.05..=-0.75).contains(&a) && (-0.50..=-0.20).contains(&b) && disjoint;
    report(
        "coherent QA vs SQA exponents (disordered L=256)",
        pass,
        &format!("QA {a:.3} +- {sa:.3} over tau in {qa_window:?}, SQA {b:.3} +- {sb:.3} over {sqa_window:?} (P=1024), 95% intervals disjoint: {disjoint}"),
    );
}
