//! One function per subcommand.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::json;
use sqa_core::analysis::{central_decade, fit_log_law, fit_power_law, fit_teff, teff_factory, FitParameter, FitResult, TeffOptions};
use sqa_core::annealing::{default_equilibration, sqa_run, Schedule, SqaOptions, TrajectoryRecord};
use sqa_core::fermion::{coherent_qa_evolve, drift_limited_time_step, QaOptions, ThermalCurveFactory};
use sqa_core::instances::{generate_instance, Instance};
use sqa_core::pimc::{equilibrium_run, MoveFamily, PimcParams};
use sqa_core::rng::chain_rng;

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::manifest::{sha256_hex, RunManifest};
use crate::sweep::{point_seed, split_results, sweep_execute};
use crate::table::{self, ColumnTable, Table};
use crate::{figures, Context, Report};

pub fn dispatch(command: &Command, ctx: &Context) -> CliResult<Report> {
    match command {
        Command::GenInstance(a) => gen_instance(a, ctx),
        Command::ExactEq(a) => exact_eq(a, ctx),
        Command::ExactQa(a) => exact_qa(a, ctx),
        Command::PimcEq(a) => pimc_eq(a, ctx),
        Command::Sqa(a) => sqa(a, ctx),
        Command::FitTeff(a) => fit_teff_cmd(a, ctx),
        Command::FitPowerlaw(a) => fit_scaling(a, ctx, ScalingModel::PowerLaw),
        Command::FitLoglaw(a) => fit_scaling(a, ctx, ScalingModel::LogLaw),
        Command::Figure(a) => figures::figure_command(a, ctx),
        Command::Replay(_) => unreachable!("handled before dispatch"),
    }
}

/// Loads an instance file and its checksum.
pub fn load_instance(path: &Path) -> CliResult<(Instance, String)> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Invalid(format!("{}: instance file is not UTF-8", path.display())))?;
    let inst = Instance::parse(&text, path)?;
    Ok((inst, sha256_hex(&bytes)))
}

fn stem(name: &str) -> &str {
    Path::new(name)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(name)
}

fn params_json<T: Serialize>(args: &T, ctx: &Context) -> serde_json::Value {
    json!({ "args": args, "seed": ctx.seed, "desk_scale": ctx.desk_scale })
}

fn manifest_for<T: Serialize>(name: &str, args: &T, ctx: &Context) -> RunManifest {
    RunManifest::new(name, ctx.argv.clone(), params_json(args, ctx), ctx.seed)
}

fn done(path: std::path::PathBuf, outputs: &RunManifest) -> Report {
    let files: Vec<&str> = outputs.outputs.iter().map(|o| o.path.as_str()).collect();
    Report {
        message: format!("wrote {} ({})", files.join(", "), path.display()),
        manifest: Some(path),
    }
}

fn gen_instance(a: &GenInstanceArgs, ctx: &Context) -> CliResult<Report> {
    let inst = generate_instance(a.length, a.distribution, ctx.seed)?;
    let text = inst.to_text();
    let mut m = manifest_for("gen-instance", a, ctx);
    m.instance_sha256 = Some(sha256_hex(text.as_bytes()));
    let path = ctx.path(&a.output);
    fs::write(&path, &text).map_err(|e| CliError::io(&path, e))?;
    m.record_output(&a.output, text.as_bytes(), "instance");
    let mpath = ctx.finish(m.clone(), stem(&a.output), Vec::new(), 1)?;
    Ok(done(mpath, &m))
}

fn sorted_unique(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn exact_eq(a: &ExactEqArgs, ctx: &Context) -> CliResult<Report> {
    let (inst, sha) = load_instance(&a.instance)?;
    let grid = a.gamma_grid.points();
    let temps = sorted_unique(&a.temp);
    let factory = ThermalCurveFactory::new(&inst, &grid)?;
    let results = sweep_execute(&temps, ctx.workers, |&t| Ok(factory.curve(t)?))?;
    let total = results.len();
    let (curves, failures) = split_results(results);
    let mut out = Table::new(table::EXACT_EQ);
    for c in &curves {
        for (&g, &e) in c.gammas().iter().zip(c.values()) {
            out.push(vec![g.into(), c.temp().into(), e.into()]);
        }
    }
    let mut m = manifest_for("exact-eq", a, ctx);
    m.instance_sha256 = Some(sha);
    ctx.emit(&mut m, &a.output, &out.to_bytes(), table::EXACT_EQ)?;
    let mpath = ctx.finish(m.clone(), stem(&a.output), failures, total)?;
    Ok(done(mpath, &m))
}

/// Resolves the `--dt` flag.
pub fn resolve_dt(spec: &str, inst: &Instance, schedule: &Schedule) -> CliResult<Option<f64>> {
    match spec {
        "default" => Ok(None),
        "auto" => Ok(Some(drift_limited_time_step(inst, schedule))),
        s => {
            let dt: f64 = s
                .parse()
                .map_err(|_| CliError::Invalid(format!("--dt: expected a number, `default` or `auto`, got {s:?}")))?;
            Ok(Some(dt))
        }
    }
}

pub fn qa_table(records: &[TrajectoryRecord]) -> Table {
    let mut out = Table::new(table::EXACT_QA);
    for r in records {
        out.push(vec![r.t.into(), r.gamma.into(), r.eps_avg.into()]);
    }
    out
}

fn exact_qa(a: &ExactQaArgs, ctx: &Context) -> CliResult<Report> {
    let (inst, sha) = load_instance(&a.instance)?;
    let schedule = Schedule::linear(a.gamma0, a.tau)?;
    let records = match a.stride {
        Some(s) if !(s > 0.0) => return Err(CliError::Invalid(format!("--stride must be positive, got {s}"))),
        Some(s) => ((a.tau / s).round() as usize).max(1),
        None => 200,
    };
    let opts = QaOptions {
        dt: resolve_dt(&a.dt, &inst, &schedule)?,
        records,
    };
    let recs = coherent_qa_evolve(&inst, &schedule, &opts)?;
    let mut m = manifest_for("exact-qa", a, ctx);
    m.instance_sha256 = Some(sha);
    ctx.emit(&mut m, &a.output, &qa_table(&recs).to_bytes(), table::EXACT_QA)?;
    let mpath = ctx.finish(m.clone(), stem(&a.output), Vec::new(), 1)?;
    Ok(done(mpath, &m))
}

#[derive(Clone, Debug)]
pub struct PimcPoint {
    pub gamma: f64,
    pub temp: f64,
    pub moves: MoveFamily,
    pub trotter: usize,
    pub rep: usize,
}

impl PimcPoint {
    pub fn label(&self) -> String {
        format!(
            "pimc-eq|gamma={}|temp={}|moves={}|P={}|rep={}",
            self.gamma, self.temp, self.moves, self.trotter, self.rep
        )
    }
}

/// Cartesian product in parameter order: field, temperature, move family,
/// slices, repetition.
pub fn pimc_points(gammas: &[f64], temps: &[f64], moves: &[MoveFamily], trotters: &[usize], reps: usize) -> Vec<PimcPoint> {
    let mut moves = moves.to_vec();
    moves.sort();
    moves.dedup();
    let mut trotters = trotters.to_vec();
    trotters.sort();
    trotters.dedup();
    let mut out = Vec::new();
    for &gamma in &sorted_unique(gammas) {
        for &temp in &sorted_unique(temps) {
            for &mv in &moves {
                for &p in &trotters {
                    for rep in 0..reps {
                        out.push(PimcPoint {
                            gamma,
                            temp,
                            moves: mv,
                            trotter: p,
                            rep,
                        });
                    }
                }
            }
        }
    }
    out
}

/// PIMC settings shared by every point of a sweep.
#[derive(Clone, Copy, Debug)]
pub struct PimcRun {
    pub mcs: u64,
    pub burn: Option<u64>,
    pub measure_every: u64,
}

/// Runs the points and returns the rows of the `pimc-eq` table.
pub fn run_pimc_points(inst: &Instance, points: &[PimcPoint], run: PimcRun, ctx: &Context) -> CliResult<(Table, Vec<String>)> {
    let results = sweep_execute(points, ctx.workers, |pt| {
        let mut params = PimcParams::new(pt.temp, pt.gamma, pt.trotter, pt.moves, run.mcs)?;
        params.t_burn = run.burn;
        params.measure_every = run.measure_every;
        params.validate()?;
        let mut rng = chain_rng(point_seed(ctx.seed, &pt.label()), 0);
        let est = equilibrium_run(inst, &params, &mut rng)?;
        Ok((pt.clone(), est.eps_c, est.stderr, est.t_burn, est.geweke_z))
    })?;
    let (rows, failures) = split_results(results);
    let mut out = Table::new(table::PIMC_EQ);
    for (pt, eps, err, burn, z) in rows {
        let moves = pt.moves.to_string();
        out.push(vec![
            pt.trotter.into(),
            pt.gamma.into(),
            pt.temp.into(),
            moves.as_str().into(),
            eps.into(),
            err.into(),
            burn.into(),
            z.into(),
            run.mcs.into(),
            pt.rep.into(),
        ]);
    }
    Ok((out, failures))
}

fn pimc_eq(a: &PimcEqArgs, ctx: &Context) -> CliResult<Report> {
    let (inst, sha) = load_instance(&a.instance)?;
    let points = pimc_points(&a.gamma, &a.temp, &a.moves, &a.trotter, a.reps);
    ctx.check_budget("pimc-eq", points.len() as u64 * a.mcs)?;
    let run = PimcRun {
        mcs: a.mcs,
        burn: a.burn,
        measure_every: a.measure_every,
    };
    let (out, failures) = run_pimc_points(&inst, &points, run, ctx)?;
    let mut m = manifest_for("pimc-eq", a, ctx);
    m.instance_sha256 = Some(sha);
    ctx.emit(&mut m, &a.output, &out.to_bytes(), table::PIMC_EQ)?;
    let mpath = ctx.finish(m.clone(), stem(&a.output), failures, points.len())?;
    Ok(done(mpath, &m))
}

/// Estimated Monte Carlo steps of an SQA run.
pub fn sqa_cost(tau: u64, t_eq: Option<u64>, reps: usize) -> u64 {
    (t_eq.unwrap_or_else(|| default_equilibration(tau)) + tau) * reps as u64
}

pub fn sqa_table(summary: &[sqa_core::annealing::SqaSummaryRow]) -> Table {
    let mut out = Table::new(table::SQA);
    for r in summary {
        out.push(vec![
            r.t.into(),
            r.gamma.into(),
            r.eps_avg_mean.into(),
            r.eps_avg_sem.into(),
            r.eps_min_mean.into(),
            r.eps_min_sem.into(),
            r.n_reps.into(),
        ]);
    }
    out
}

fn sqa(a: &SqaArgs, ctx: &Context) -> CliResult<Report> {
    let (inst, sha) = load_instance(&a.instance)?;
    ctx.check_budget("sqa", sqa_cost(a.tau, a.t_eq, a.reps))?;
    let schedule = Schedule::linear(a.gamma0, a.tau as f64)?;
    let opts = SqaOptions {
        temp: a.temp,
        trotter: a.trotter,
        moves: a.moves,
        n_reps: a.reps,
        stride: a.stride,
        t_eq: a.t_eq,
        seed: ctx.seed,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.workers.max(1))
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))?;
    let outcome = pool.install(|| sqa_run(&inst, &schedule, &opts))?;
    let mut m = manifest_for("sqa", a, ctx);
    m.instance_sha256 = Some(sha);
    ctx.emit(&mut m, &a.output, &sqa_table(&outcome.summary).to_bytes(), table::SQA)?;
    let mpath = ctx.finish(m.clone(), stem(&a.output), Vec::new(), 1)?;
    Ok(done(mpath, &m))
}

/// The JSON written by the fit commands.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct FitJson {
    pub parameter: FitParameter,
    pub stderr: Vec<f64>,
    pub window: (f64, f64),
    pub residual_rms: f64,
}

impl From<&FitResult> for FitJson {
    fn from(f: &FitResult) -> Self {
        FitJson {
            parameter: f.parameter,
            stderr: f.stderr.clone(),
            window: f.window,
            residual_rms: f.residual_rms,
        }
    }
}

pub fn fit_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("fit serializes");
    s.push('\n');
    s.into_bytes()
}

fn pick_column(t: &ColumnTable, requested: &Option<String>, path: &Path) -> CliResult<String> {
    if let Some(c) = requested {
        return Ok(c.clone());
    }
    ["eps_res", "eps_avg_mean"]
        .into_iter()
        .find(|c| t.has(c))
        .map(str::to_string)
        .ok_or_else(|| CliError::Table {
            path: path.to_path_buf(),
            message: "no eps_res or eps_avg_mean column; pass --column".into(),
        })
}

/// Reads a trajectory CSV (`sqa` or `exact-qa` schema) into records.
pub fn read_trajectory(path: &Path, column: &Option<String>) -> CliResult<Vec<TrajectoryRecord>> {
    let t = ColumnTable::read(path)?;
    let time_col = if t.has("t_mcs") { "t_mcs" } else { "t" };
    let times = t.numbers(time_col, path)?;
    let gammas = t.numbers("gamma", path)?;
    let eps = t.numbers(&pick_column(&t, column, path)?, path)?;
    Ok(times
        .iter()
        .zip(&gammas)
        .zip(&eps)
        .map(|((&time, &g), &e)| TrajectoryRecord::coherent(time, g, e))
        .collect())
}

fn fit_teff_cmd(a: &FitTeffArgs, ctx: &Context) -> CliResult<Report> {
    let (inst, sha) = load_instance(&a.instance)?;
    let records = read_trajectory(&a.input, &a.column)?;
    let factory = teff_factory(&inst, &records, a.window)?;
    let fit = fit_teff(
        &records,
        &factory,
        &TeffOptions {
            window: a.window,
            t_range: a.t_range,
        },
    )?;
    let bytes = fit_json_bytes(&FitJson::from(&fit));
    let mut m = manifest_for("fit-teff", a, ctx);
    m.instance_sha256 = Some(sha);
    ctx.emit(&mut m, &a.output, &bytes, table::FIT_JSON)?;
    let mpath = ctx.finish(m, stem(&a.output), Vec::new(), 1)?;
    Ok(Report {
        manifest: Some(mpath),
        message: String::from_utf8(bytes).expect("utf-8 json").trim_end().to_string(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ScalingModel {
    PowerLaw,
    LogLaw,
}

/// `(tau, eps)` pairs from a scaling CSV.
pub fn read_scaling(path: &Path, x_column: &str, column: &Option<String>) -> CliResult<Vec<(f64, f64)>> {
    let t = ColumnTable::read(path)?;
    let xs = t.numbers(x_column, path)?;
    let ys = t.numbers(&pick_column(&t, column, path)?, path)?;
    Ok(xs.into_iter().zip(ys).collect())
}

fn fit_scaling(a: &FitScalingArgs, ctx: &Context, model: ScalingModel) -> CliResult<Report> {
    let points = read_scaling(&a.input, &a.x_column, &a.column)?;
    let (name, default_out) = match model {
        ScalingModel::PowerLaw => ("fit-powerlaw", "fit_powerlaw.json"),
        ScalingModel::LogLaw => ("fit-loglaw", "fit_loglaw.json"),
    };
    let fit = match model {
        ScalingModel::PowerLaw => {
            let taus: Vec<f64> = points.iter().map(|p| p.0).collect();
            if taus.is_empty() {
                return Err(CliError::Invalid(format!("{}: no data rows", a.input.display())));
            }
            let window = a.window.unwrap_or_else(|| central_decade(&taus));
            fit_power_law(&points, window)?
        }
        ScalingModel::LogLaw => {
            let pts: Vec<(f64, f64)> = match a.window {
                Some((lo, hi)) => points.into_iter().filter(|p| p.0 >= lo && p.0 <= hi).collect(),
                None => points,
            };
            fit_log_law(&pts)?
        }
    };
    let bytes = fit_json_bytes(&FitJson::from(&fit));
    let output = a.output.clone().unwrap_or_else(|| default_out.to_string());
    let mut m = manifest_for(name, a, ctx);
    ctx.emit(&mut m, &output, &bytes, table::FIT_JSON)?;
    let mpath = ctx.finish(m, stem(&output), Vec::new(), 1)?;
    Ok(Report {
        manifest: Some(mpath),
        message: String::from_utf8(bytes).expect("utf-8 json").trim_end().to_string(),
    })
}

