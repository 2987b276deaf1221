//! Parameter sweeps behind each figure, at paper scale or a desk-scale
//! reduction.
//!
//! | id   | content                                                        |
//! |------|----------------------------------------------------------------|
//! | fig1 | equilibrium PIMC against `1/P` for both move families + exact   |
//! | fig2 | ordered chain, final SQA residual energy against `tau`          |
//! | fig3 | disordered chain, final SQA residual energy, `tau x P`, both moves |
//! | fig4 | SQA and coherent trajectories with effective-temperature fits   |
//! | fig5 | coherent QA against SQA, final residual energy and exponents    |

use serde::Serialize;
use serde_json::json;
use sqa_core::analysis::{central_decade, fit_log_law, fit_power_law, fit_teff, teff_factory, TeffOptions};
use sqa_core::annealing::{sqa_run, Schedule, SqaOptions, SqaOutcome, TrajectoryRecord};
use sqa_core::fermion::{coherent_qa_evolve, drift_limited_time_step, equilibrium_eps_c, tabulate_equilibrium, QaOptions};
use sqa_core::instances::{generate_instance, Distribution, Instance};
use sqa_core::pimc::MoveFamily;

use crate::args::{FigureArgs, FigureId};
use crate::commands::{load_instance, pimc_points, qa_table, run_pimc_points, sqa_cost, sqa_table, FitJson, PimcRun};
use crate::error::{CliError, CliResult};
use crate::manifest::{sha256_hex, RunManifest};
use crate::sweep::{point_seed, sweep_execute};
use crate::table::{self, Table};
use crate::{Context, Report};

pub const GAMMA0: f64 = 2.5;

/// Annealing times `10^(k/2)` rounded to integers, for `k` from
/// `2 lo_exp` to `2 hi_exp`.
pub fn half_decades(lo_exp: i32, hi_exp: i32) -> Vec<f64> {
    (2 * lo_exp..=2 * hi_exp)
        .map(|k| 10f64.powf(k as f64 / 2.0).round())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fig1Config {
    pub length: usize,
    pub instance_seed: u64,
    pub temp: f64,
    pub gammas: Vec<f64>,
    pub trotters: Vec<usize>,
    pub moves: Vec<MoveFamily>,
    pub t_run: u64,
    pub reps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fig2Config {
    pub length: usize,
    pub temp: f64,
    pub trotter: usize,
    pub taus: Vec<f64>,
    pub reps: usize,
    /// Power-law window; `None` uses the central decade.
    pub window: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fig3Config {
    pub length: usize,
    pub instance_seed: u64,
    pub temp: f64,
    pub trotters: Vec<usize>,
    pub moves: Vec<MoveFamily>,
    pub taus: Vec<f64>,
    pub reps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fig4Config {
    pub length: usize,
    pub instance_seed: u64,
    pub temp: f64,
    pub trotter: usize,
    /// Annealing times of the SQA runs, in Monte Carlo steps.
    pub sqa_taus: Vec<f64>,
    /// Annealing times of the coherent runs.
    pub qa_taus: Vec<f64>,
    pub reps: usize,
    /// Recorded points per trajectory.
    pub points: usize,
    pub window: (f64, f64),
    pub t_range: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fig5Config {
    pub length: usize,
    pub instance_seed: u64,
    pub temp: f64,
    pub trotter: usize,
    pub qa_taus: Vec<f64>,
    pub sqa_taus: Vec<f64>,
    pub reps: usize,
    pub qa_window: Option<(f64, f64)>,
    pub sqa_window: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "figure", rename_all = "lowercase")]
pub enum FigureConfig {
    Fig1(Fig1Config),
    Fig2(Fig2Config),
    Fig3(Fig3Config),
    Fig4(Fig4Config),
    Fig5(Fig5Config),
}

impl FigureConfig {
    pub fn preset(id: FigureId, desk: bool) -> Self {
        let length = if desk { 64 } else { 256 };
        match id {
            FigureId::Fig1 => FigureConfig::Fig1(Fig1Config {
                length,
                instance_seed: 1,
                temp: if desk { 0.1 } else { 0.01 },
                gammas: vec![0.1, 1.0],
                trotters: if desk {
                    vec![8, 16, 32, 64, 128, 256]
                } else {
                    vec![8, 16, 32, 64, 128, 256, 512, 1024]
                },
                moves: vec![MoveFamily::TimeCluster, MoveFamily::SpacetimeSw],
                t_run: if desk { 100_000 } else { 100_000_000 },
                reps: 1,
            }),
            FigureId::Fig2 => FigureConfig::Fig2(Fig2Config {
                length,
                temp: 0.01,
                trotter: if desk { 64 } else { 256 },
                taus: if desk { half_decades(1, 3) } else { half_decades(1, 4) },
                reps: if desk { 16 } else { 32 },
                window: None,
            }),
            FigureId::Fig3 => FigureConfig::Fig3(Fig3Config {
                length,
                instance_seed: 1,
                temp: 0.01,
                trotters: if desk { vec![8, 32, 128] } else { vec![16, 64, 256, 1024] },
                moves: vec![MoveFamily::TimeCluster, MoveFamily::SpacetimeSw],
                taus: if desk { half_decades(1, 3) } else { half_decades(1, 5) },
                reps: if desk { 8 } else { 32 },
            }),
            FigureId::Fig4 => FigureConfig::Fig4(Fig4Config {
                length,
                instance_seed: 1,
                temp: 0.01,
                trotter: if desk { 256 } else { 1024 },
                sqa_taus: if desk { vec![100.0, 316.0, 1000.0] } else { vec![1000.0, 3162.0, 10000.0] },
                qa_taus: if desk { vec![10.0, 32.0, 100.0] } else { vec![32.0, 100.0, 316.0] },
                reps: if desk { 16 } else { 32 },
                points: 100,
                window: (0.0, 1.5),
                t_range: (1e-3, 10.0),
            }),
            FigureId::Fig5 => FigureConfig::Fig5(Fig5Config {
                length,
                instance_seed: 1,
                temp: 0.01,
                trotter: if desk { 64 } else { 1024 },
                qa_taus: if desk { half_decades(0, 3) } else { half_decades(0, 4) },
                sqa_taus: if desk { half_decades(1, 3) } else { half_decades(1, 5) },
                reps: if desk { 8 } else { 32 },
                qa_window: None,
                sqa_window: None,
            }),
        }
    }

    pub fn id(&self) -> FigureId {
        match self {
            FigureConfig::Fig1(_) => FigureId::Fig1,
            FigureConfig::Fig2(_) => FigureId::Fig2,
            FigureConfig::Fig3(_) => FigureId::Fig3,
            FigureConfig::Fig4(_) => FigureId::Fig4,
            FigureConfig::Fig5(_) => FigureId::Fig5,
        }
    }

    /// Applies the command-line overrides of `figure`.
    pub fn with_overrides(mut self, a: &FigureArgs) -> CliResult<Self> {
        let single_p = |ps: &Option<Vec<usize>>| -> CliResult<Option<usize>> {
            match ps.as_deref() {
                None => Ok(None),
                Some([p]) => Ok(Some(*p)),
                Some(_) => Err(CliError::Invalid(format!(
                    "{} takes a single --trotter value",
                    a.id.name()
                ))),
            }
        };
        if a.mcs.is_some() && a.id != FigureId::Fig1 {
            return Err(CliError::Invalid("--mcs only applies to fig1".into()));
        }
        if a.tau.is_some() && a.id == FigureId::Fig1 {
            return Err(CliError::Invalid("fig1 has no annealing times".into()));
        }
        match &mut self {
            FigureConfig::Fig1(c) => {
                set(&mut c.length, a.length);
                set(&mut c.instance_seed, Some(a.instance_seed));
                set(&mut c.temp, a.temp);
                set(&mut c.trotters, a.trotter.clone());
                set(&mut c.t_run, a.mcs);
                set(&mut c.reps, a.reps);
            }
            FigureConfig::Fig2(c) => {
                set(&mut c.length, a.length);
                set(&mut c.temp, a.temp);
                set(&mut c.trotter, single_p(&a.trotter)?);
                set(&mut c.taus, a.tau.clone());
                set(&mut c.reps, a.reps);
            }
            FigureConfig::Fig3(c) => {
                set(&mut c.length, a.length);
                set(&mut c.instance_seed, Some(a.instance_seed));
                set(&mut c.temp, a.temp);
                set(&mut c.trotters, a.trotter.clone());
                set(&mut c.taus, a.tau.clone());
                set(&mut c.reps, a.reps);
            }
            FigureConfig::Fig4(c) => {
                set(&mut c.length, a.length);
                set(&mut c.instance_seed, Some(a.instance_seed));
                set(&mut c.temp, a.temp);
                set(&mut c.trotter, single_p(&a.trotter)?);
                set(&mut c.sqa_taus, a.tau.clone());
                set(&mut c.qa_taus, a.tau.clone());
                set(&mut c.reps, a.reps);
            }
            FigureConfig::Fig5(c) => {
                set(&mut c.length, a.length);
                set(&mut c.instance_seed, Some(a.instance_seed));
                set(&mut c.temp, a.temp);
                set(&mut c.trotter, single_p(&a.trotter)?);
                set(&mut c.qa_taus, a.tau.clone());
                set(&mut c.sqa_taus, a.tau.clone());
                set(&mut c.reps, a.reps);
            }
        }
        Ok(self)
    }

    /// Monte Carlo steps the sweep will run, summed over all runs.
    pub fn estimated_mcs(&self) -> u64 {
        let sqa = |taus: &[f64], reps: usize| -> u64 { taus.iter().map(|&t| sqa_cost(t as u64, None, reps)).sum() };
        match self {
            FigureConfig::Fig1(c) => {
                (c.gammas.len() * c.trotters.len() * c.moves.len() * c.reps) as u64 * c.t_run
            }
            FigureConfig::Fig2(c) => sqa(&c.taus, c.reps),
            FigureConfig::Fig3(c) => (c.trotters.len() * c.moves.len()) as u64 * sqa(&c.taus, c.reps),
            FigureConfig::Fig4(c) => sqa(&c.sqa_taus, c.reps),
            FigureConfig::Fig5(c) => sqa(&c.sqa_taus, c.reps),
        }
    }

    fn validate(&self) -> CliResult<()> {
        let taus_ok = |taus: &[f64]| taus.iter().all(|&t| t >= 1.0 && t.fract() == 0.0);
        let ok = match self {
            FigureConfig::Fig1(c) => !c.trotters.is_empty() && c.reps > 0,
            FigureConfig::Fig2(c) => taus_ok(&c.taus) && c.reps > 0,
            FigureConfig::Fig3(c) => taus_ok(&c.taus) && !c.trotters.is_empty() && c.reps > 0,
            FigureConfig::Fig4(c) => {
                taus_ok(&c.sqa_taus) && c.qa_taus.iter().all(|&t| t > 0.0) && c.reps > 0 && c.points > 0
            }
            FigureConfig::Fig5(c) => taus_ok(&c.sqa_taus) && c.qa_taus.iter().all(|&t| t > 0.0) && c.reps > 0,
        };
        if ok {
            Ok(())
        } else {
            Err(CliError::Invalid(format!(
                "{}: annealing times must be whole numbers >= 1, and slice and repetition counts positive",
                self.id().name()
            )))
        }
    }

    /// The chain the figure runs on, unless one is supplied.
    pub fn default_instance(&self) -> CliResult<Instance> {
        Ok(match self {
            FigureConfig::Fig1(c) => generate_instance(c.length, Distribution::Uniform01, c.instance_seed)?,
            FigureConfig::Fig2(c) => generate_instance(c.length, Distribution::Ordered(1.0), 0)?,
            FigureConfig::Fig3(c) => generate_instance(c.length, Distribution::Uniform01, c.instance_seed)?,
            FigureConfig::Fig4(c) => generate_instance(c.length, Distribution::Uniform01, c.instance_seed)?,
            FigureConfig::Fig5(c) => generate_instance(c.length, Distribution::Uniform01, c.instance_seed)?,
        })
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// One unit of work in a figure sweep.
#[derive(Clone, Debug)]
enum Job {
    Sqa {
        moves: MoveFamily,
        trotter: usize,
        tau: f64,
        stride: u64,
    },
    Qa {
        tau: f64,
        records: usize,
    },
}

enum JobOutput {
    Sqa(SqaOutcome),
    Qa(Vec<TrajectoryRecord>),
}

impl JobOutput {
    fn sqa(&self) -> &SqaOutcome {
        match self {
            JobOutput::Sqa(o) => o,
            JobOutput::Qa(_) => unreachable!("job kinds are fixed by position"),
        }
    }

    fn qa(&self) -> &[TrajectoryRecord] {
        match self {
            JobOutput::Qa(r) => r,
            JobOutput::Sqa(_) => unreachable!("job kinds are fixed by position"),
        }
    }
}

fn run_jobs(
    fig: &str,
    inst: &Instance,
    temp: f64,
    reps: usize,
    jobs: &[Job],
    ctx: &Context,
) -> CliResult<Vec<CliResult<JobOutput>>> {
    sweep_execute(jobs, ctx.workers, |job| match *job {
        Job::Sqa {
            moves,
            trotter,
            tau,
            stride,
        } => {
            let schedule = Schedule::linear(GAMMA0, tau)?;
            let label = format!("{fig}|sqa|moves={moves}|P={trotter}|tau={tau}");
            let opts = SqaOptions {
                temp,
                trotter,
                moves,
                n_reps: reps,
                stride,
                t_eq: None,
                seed: point_seed(ctx.seed, &label),
            };
            Ok(JobOutput::Sqa(sqa_run(inst, &schedule, &opts)?))
        }
        Job::Qa { tau, records } => {
            let schedule = Schedule::linear(GAMMA0, tau)?;
            let opts = QaOptions {
                dt: Some(drift_limited_time_step(inst, &schedule)),
                records,
            };
            Ok(JobOutput::Qa(coherent_qa_evolve(inst, &schedule, &opts)?))
        }
    })
}

fn exact_line(inst: &Instance, gammas: &[f64], temp: f64) -> CliResult<Table> {
    let mut out = Table::new(table::EXACT_EQ);
    for &g in gammas {
        out.push(vec![g.into(), temp.into(), equilibrium_eps_c(inst, g, temp)?.into()]);
    }
    Ok(out)
}

fn scaling_table(rows: &[(f64, &SqaOutcome)]) -> Table {
    let mut out = Table::new(table::SQA_SCALING);
    for (tau, o) in rows {
        let r = o.final_row();
        out.push(vec![
            (*tau).into(),
            r.eps_avg_mean.into(),
            r.eps_avg_sem.into(),
            r.eps_min_mean.into(),
            r.eps_min_sem.into(),
            r.n_reps.into(),
        ]);
    }
    out
}

fn power_law_json(points: &[(f64, f64)], window: Option<(f64, f64)>) -> serde_json::Value {
    let taus: Vec<f64> = points.iter().map(|p| p.0).collect();
    if taus.is_empty() {
        return json!({ "error": "no points" });
    }
    let window = window.unwrap_or_else(|| central_decade(&taus));
    match fit_power_law(points, window) {
        Ok(f) => serde_json::to_value(FitJson::from(&f)).expect("fit serializes"),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn log_law_json(points: &[(f64, f64)]) -> serde_json::Value {
    match fit_log_law(points) {
        Ok(f) => serde_json::to_value(FitJson::from(&f)).expect("fit serializes"),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn json_bytes(v: &serde_json::Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s.into_bytes()
}

/// Result of a pipeline before its manifest is saved.
pub struct FigureRun {
    pub manifest: RunManifest,
    pub failures: Vec<String>,
    pub n_points: usize,
}

/// Runs the sweep for `cfg` and writes its CSVs into `ctx.out_dir`.
pub fn run_figure_pipeline(cfg: &FigureConfig, instance: Option<&Instance>, ctx: &Context) -> CliResult<FigureRun> {
    cfg.validate()?;
    let estimate = cfg.estimated_mcs();
    ctx.check_budget(cfg.id().name(), estimate)?;
    let owned;
    let inst = match instance {
        Some(i) => i,
        None => {
            owned = cfg.default_instance()?;
            &owned
        }
    };
    let fig = cfg.id().name();
    let params = json!({ "config": cfg, "seed": ctx.seed, "estimated_mcs": estimate, "length": inst.len() });
    let mut m = RunManifest::new("figure", ctx.argv.clone(), params, ctx.seed);
    let inst_text = inst.to_text();
    m.instance_sha256 = Some(sha256_hex(inst_text.as_bytes()));
    ctx.emit(
        &mut m,
        &format!("{fig}_instance.txt"),
        inst_text.as_bytes(),
        table::Schema {
            name: "instance",
            columns: &[],
        },
    )?;
    let (failures, n_points) = match cfg {
        FigureConfig::Fig1(c) => fig1(c, inst, ctx, &mut m)?,
        FigureConfig::Fig2(c) => fig2(c, inst, ctx, &mut m)?,
        FigureConfig::Fig3(c) => fig3(c, inst, ctx, &mut m)?,
        FigureConfig::Fig4(c) => fig4(c, inst, ctx, &mut m)?,
        FigureConfig::Fig5(c) => fig5(c, inst, ctx, &mut m)?,
    };
    Ok(FigureRun {
        manifest: m,
        failures,
        n_points,
    })
}

pub fn figure_command(a: &FigureArgs, ctx: &Context) -> CliResult<Report> {
    let cfg = FigureConfig::preset(a.id, ctx.desk_scale).with_overrides(a)?;
    let supplied = match &a.instance {
        Some(path) => Some(load_instance(path)?.0),
        None => None,
    };
    if supplied.is_some() && a.id == FigureId::Fig2 {
        return Err(CliError::Invalid("fig2 always runs on the ordered chain".into()));
    }
    let run = run_figure_pipeline(&cfg, supplied.as_ref(), ctx)?;
    let files: Vec<String> = run.manifest.outputs.iter().map(|o| o.path.clone()).collect();
    let path = ctx.finish(run.manifest, a.id.name(), run.failures, run.n_points)?;
    Ok(Report {
        message: format!("wrote {} ({})", files.join(", "), path.display()),
        manifest: Some(path),
    })
}

type Step = CliResult<(Vec<String>, usize)>;

fn fig1(c: &Fig1Config, inst: &Instance, ctx: &Context, m: &mut RunManifest) -> Step {
    let points = pimc_points(&c.gammas, &[c.temp], &c.moves, &c.trotters, c.reps);
    let run = PimcRun {
        mcs: c.t_run,
        burn: None,
        measure_every: 1,
    };
    let (all, failures) = run_pimc_points(inst, &points, run, ctx)?;
    // one file per (field, move family) curve
    let bytes = all.to_bytes();
    let text = String::from_utf8(bytes).expect("utf-8 csv");
    let mut gammas = c.gammas.clone();
    gammas.sort_by(f64::total_cmp);
    gammas.dedup();
    let mut moves = c.moves.clone();
    moves.sort();
    moves.dedup();
    for &g in &gammas {
        for &mv in &moves {
            let mut curve = String::new();
            for (i, line) in text.lines().enumerate() {
                let keep = i == 0 || {
                    let f: Vec<&str> = line.split(',').collect();
                    f[1].parse::<f64>().ok() == Some(g) && f[3] == mv.to_string()
                };
                if keep {
                    curve.push_str(line);
                    curve.push('\n');
                }
            }
            ctx.emit(m, &format!("fig1_gamma{g}_{mv}.csv"), curve.as_bytes(), table::PIMC_EQ)?;
        }
    }
    ctx.emit(m, "fig1_exact.csv", &exact_line(inst, &gammas, c.temp)?.to_bytes(), table::EXACT_EQ)?;
    Ok((failures, points.len()))
}

fn fig2(c: &Fig2Config, inst: &Instance, ctx: &Context, m: &mut RunManifest) -> Step {
    let jobs: Vec<Job> = c
        .taus
        .iter()
        .map(|&tau| Job::Sqa {
            moves: MoveFamily::TimeCluster,
            trotter: c.trotter,
            tau,
            stride: tau as u64,
        })
        .collect();
    let results = run_jobs("fig2", inst, c.temp, c.reps, &jobs, ctx)?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (job, r) in jobs.iter().zip(results) {
        match (job, r) {
            (Job::Sqa { tau, .. }, Ok(o)) => rows.push((*tau, o)),
            (_, Err(e)) => failures.push(e.to_string()),
            _ => unreachable!(),
        }
    }
    let view: Vec<(f64, &SqaOutcome)> = rows.iter().map(|(t, o)| (*t, o.sqa())).collect();
    ctx.emit(m, "fig2_sqa.csv", &scaling_table(&view).to_bytes(), table::SQA_SCALING)?;
    ctx.emit(m, "fig2_exact.csv", &exact_line(inst, &[0.0], c.temp)?.to_bytes(), table::EXACT_EQ)?;
    let pts: Vec<(f64, f64)> = view.iter().map(|(t, o)| (*t, o.final_row().eps_avg_mean)).collect();
    let fit = json!({ "sqa_power_law": power_law_json(&pts, c.window) });
    ctx.emit(m, "fig2_fit.json", &json_bytes(&fit), table::FIT_JSON)?;
    Ok((failures, jobs.len()))
}

fn fig3(c: &Fig3Config, inst: &Instance, ctx: &Context, m: &mut RunManifest) -> Step {
    let mut moves = c.moves.clone();
    moves.sort();
    moves.dedup();
    let mut trotters = c.trotters.clone();
    trotters.sort();
    trotters.dedup();
    let mut jobs = Vec::new();
    for &mv in &moves {
        for &p in &trotters {
            for &tau in &c.taus {
                jobs.push(Job::Sqa {
                    moves: mv,
                    trotter: p,
                    tau,
                    stride: tau as u64,
                });
            }
        }
    }
    let results = run_jobs("fig3", inst, c.temp, c.reps, &jobs, ctx)?;
    let mut failures = Vec::new();
    let mut curves: Vec<((MoveFamily, usize), Vec<(f64, JobOutput)>)> = Vec::new();
    for (job, r) in jobs.iter().zip(results) {
        let Job::Sqa { moves, trotter, tau, .. } = *job else { unreachable!() };
        let key = (moves, trotter);
        if curves.last().map(|c| c.0) != Some(key) {
            curves.push((key, Vec::new()));
        }
        match r {
            Ok(o) => curves.last_mut().expect("pushed").1.push((tau, o)),
            Err(e) => failures.push(e.to_string()),
        }
    }
    for ((mv, p), rows) in &curves {
        let panel = if *mv == MoveFamily::TimeCluster { "a" } else { "b" };
        let suffix = if matches!(mv, MoveFamily::SpacetimeWolff) { "_wolff" } else { "" };
        let view: Vec<(f64, &SqaOutcome)> = rows.iter().map(|(t, o)| (*t, o.sqa())).collect();
        ctx.emit(
            m,
            &format!("fig3{panel}_P{p}{suffix}.csv"),
            &scaling_table(&view).to_bytes(),
            table::SQA_SCALING,
        )?;
    }
    ctx.emit(m, "fig3_exact.csv", &exact_line(inst, &[0.0], c.temp)?.to_bytes(), table::EXACT_EQ)?;
    Ok((failures, jobs.len()))
}

fn fig4(c: &Fig4Config, inst: &Instance, ctx: &Context, m: &mut RunManifest) -> Step {
    let mut jobs = Vec::new();
    for &tau in &c.sqa_taus {
        jobs.push(Job::Sqa {
            moves: MoveFamily::TimeCluster,
            trotter: c.trotter,
            tau,
            stride: ((tau as u64) / c.points as u64).max(1),
        });
    }
    for &tau in &c.qa_taus {
        jobs.push(Job::Qa { tau, records: c.points });
    }
    let results = run_jobs("fig4", inst, c.temp, c.reps, &jobs, ctx)?;
    let opts = TeffOptions {
        window: c.window,
        t_range: c.t_range,
    };
    let mut failures = Vec::new();
    let mut fits = Table::new(table::TEFF_FITS);
    for (job, r) in jobs.iter().zip(results) {
        let out = match r {
            Ok(o) => o,
            Err(e) => {
                failures.push(e.to_string());
                continue;
            }
        };
        let (source, panel, tau, records, table_bytes, schema) = match (job, &out) {
            (Job::Sqa { tau, .. }, JobOutput::Sqa(o)) => {
                let recs: Vec<TrajectoryRecord> = o
                    .summary
                    .iter()
                    .map(|s| TrajectoryRecord::coherent(s.t, s.gamma, s.eps_avg_mean))
                    .collect();
                ("sqa", "a", *tau, recs, sqa_table(&o.summary).to_bytes(), table::SQA)
            }
            (Job::Qa { tau, .. }, JobOutput::Qa(r)) => ("qa", "b", *tau, r.clone(), qa_table(r).to_bytes(), table::EXACT_QA),
            _ => unreachable!(),
        };
        ctx.emit(m, &format!("fig4{panel}_tau{tau}.csv"), &table_bytes, schema)?;
        let fit = teff_factory(inst, &records, c.window).and_then(|f| fit_teff(&records, &f, &opts));
        match fit {
            Ok(f) => {
                fits.push(vec![
                    source.into(),
                    tau.into(),
                    f.value().into(),
                    f.stderr[0].into(),
                    f.residual_rms.into(),
                    f.n_points.into(),
                ]);
                let grid: Vec<f64> = (0..=((c.window.1 - c.window.0) / 0.01).round() as usize)
                    .map(|k| c.window.0 + 0.01 * k as f64)
                    .collect();
                let curve = tabulate_equilibrium(inst, &grid, f.value())?;
                let mut t = Table::new(table::EXACT_EQ);
                for (&g, &e) in curve.gammas().iter().zip(curve.values()) {
                    t.push(vec![g.into(), curve.temp().into(), e.into()]);
                }
                ctx.emit(m, &format!("fig4{panel}_fit_tau{tau}.csv"), &t.to_bytes(), table::EXACT_EQ)?;
            }
            Err(e) => failures.push(format!("{source} tau={tau}: {e}")),
        }
    }
    ctx.emit(m, "fig4_teff.csv", &fits.to_bytes(), table::TEFF_FITS)?;
    Ok((failures, jobs.len()))
}

fn fig5(c: &Fig5Config, inst: &Instance, ctx: &Context, m: &mut RunManifest) -> Step {
    let mut jobs: Vec<Job> = c.qa_taus.iter().map(|&tau| Job::Qa { tau, records: 1 }).collect();
    jobs.extend(c.sqa_taus.iter().map(|&tau| Job::Sqa {
        moves: MoveFamily::TimeCluster,
        trotter: c.trotter,
        tau,
        stride: tau as u64,
    }));
    let results = run_jobs("fig5", inst, c.temp, c.reps, &jobs, ctx)?;
    let mut failures = Vec::new();
    let mut qa = Vec::new();
    let mut sqa = Vec::new();
    for (job, r) in jobs.iter().zip(results) {
        match (job, r) {
            (Job::Qa { tau, .. }, Ok(o)) => qa.push((*tau, o.qa().last().expect("final record").eps_avg)),
            (Job::Sqa { tau, .. }, Ok(o)) => sqa.push((*tau, o)),
            (_, Err(e)) => failures.push(e.to_string()),
        }
    }
    let mut qa_t = Table::new(table::QA_SCALING);
    for &(tau, e) in &qa {
        qa_t.push(vec![tau.into(), e.into()]);
    }
    ctx.emit(m, "fig5_qa.csv", &qa_t.to_bytes(), table::QA_SCALING)?;
    let view: Vec<(f64, &SqaOutcome)> = sqa.iter().map(|(t, o)| (*t, o.sqa())).collect();
    ctx.emit(m, "fig5_sqa.csv", &scaling_table(&view).to_bytes(), table::SQA_SCALING)?;
    let sqa_pts: Vec<(f64, f64)> = view.iter().map(|(t, o)| (*t, o.final_row().eps_avg_mean)).collect();
    let fits = json!({
        "qa_power_law": power_law_json(&qa, c.qa_window),
        "sqa_power_law": power_law_json(&sqa_pts, c.sqa_window),
        "qa_log_law": log_law_json(&qa),
        "sqa_log_law": log_law_json(&sqa_pts),
    });
    ctx.emit(m, "fig5_fits.json", &json_bytes(&fits), table::FIT_JSON)?;
    ctx.emit(m, "fig5_exact.csv", &exact_line(inst, &[0.0], c.temp)?.to_bytes(), table::EXACT_EQ)?;
    Ok((failures, jobs.len()))
}
