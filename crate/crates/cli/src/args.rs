use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sqa_core::instances::Distribution;
use sqa_core::pimc::MoveFamily;

#[derive(Parser, Debug)]
#[command(
    name = "sqa",
    version,
    about = "Simulated quantum annealing, path-integral Monte Carlo and exact free-fermion references for random Ising chains"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GlobalArgs {
    /// Master seed; every run derives its own streams from it.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads (default: all cores). Never changes results.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Directory for CSV, JSON and manifest output (default: `.`).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Use the reduced figure presets.
    #[arg(long, global = true)]
    pub desk_scale: bool,
    /// Refuse runs whose estimated Monte Carlo steps exceed this.
    #[arg(long, global = true)]
    pub max_mcs: Option<u64>,
    /// Config file with per-subcommand defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw a random chain and write it as an instance file.
    GenInstance(GenInstanceArgs),
    /// Exact thermal eps_c on a field grid.
    ExactEq(ExactEqArgs),
    /// Coherent annealing from the free-fermion equations of motion.
    ExactQa(ExactQaArgs),
    /// Fixed-field PIMC estimates of eps_c.
    PimcEq(PimcEqArgs),
    /// Simulated quantum annealing trajectory.
    Sqa(SqaArgs),
    /// Fit the effective-temperature Ansatz to a trajectory CSV.
    FitTeff(FitTeffArgs),
    /// Fit a power law to residual energy against annealing time.
    FitPowerlaw(FitScalingArgs),
    /// Fit eps = [log(gamma tau)]^(-xi) to residual energy against annealing time.
    FitLoglaw(FitScalingArgs),
    /// Produce the data behind one figure.
    Figure(FigureArgs),
    /// Re-run a manifest and compare output checksums.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenInstance(_) => "gen-instance",
            Command::ExactEq(_) => "exact-eq",
            Command::ExactQa(_) => "exact-qa",
            Command::PimcEq(_) => "pimc-eq",
            Command::Sqa(_) => "sqa",
            Command::FitTeff(_) => "fit-teff",
            Command::FitPowerlaw(_) => "fit-powerlaw",
            Command::FitLoglaw(_) => "fit-loglaw",
            Command::Figure(_) => "figure",
            Command::Replay(_) => "replay",
        }
    }
}

pub const SUBCOMMANDS: [&str; 10] = [
    "gen-instance",
    "exact-eq",
    "exact-qa",
    "pimc-eq",
    "sqa",
    "fit-teff",
    "fit-powerlaw",
    "fit-loglaw",
    "figure",
    "replay",
];

/// `a:b:step`, inclusive of both ends.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected start:stop:step, got {s:?}"));
    }
    let num = |p: &str| p.trim().parse::<f64>().map_err(|_| format!("bad number {p:?} in {s:?}"));
    let g = Grid {
        start: num(parts[0])?,
        stop: num(parts[1])?,
        step: num(parts[2])?,
    };
    if !(g.step > 0.0 && g.start.is_finite() && g.stop.is_finite()) {
        return Err(format!("grid {s:?} needs a positive step and finite ends"));
    }
    if g.stop < g.start {
        return Err(format!("grid {s:?} ends before it starts"));
    }
    Ok(g)
}

/// `lo:hi`.
pub fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
    let num = |p: &str| p.trim().parse::<f64>().map_err(|_| format!("bad number {p:?} in {s:?}"));
    let (lo, hi) = (num(a)?, num(b)?);
    if !(lo <= hi) {
        return Err(format!("range {s:?} is empty"));
    }
    Ok((lo, hi))
}

fn parse_moves(s: &str) -> Result<MoveFamily, String> {
    s.parse()
}

fn parse_distribution(s: &str) -> Result<Distribution, String> {
    s.parse()
}

#[derive(Args, Debug, Serialize)]
pub struct GenInstanceArgs {
    /// Number of spins.
    #[arg(short = 'L', long)]
    pub length: usize,
    /// `uniform01` or `ordered(J)`.
    #[arg(long, default_value = "uniform01", value_parser = parse_distribution)]
    pub distribution: Distribution,
    #[arg(long, default_value = "instance.txt")]
    pub output: String,
}

#[derive(Args, Debug, Serialize)]
pub struct ExactEqArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Field grid `start:stop:step`.
    #[arg(long, value_parser = parse_grid)]
    pub gamma_grid: Grid,
    /// Temperatures, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub temp: Vec<f64>,
    #[arg(long, default_value = "exact_eq.csv")]
    pub output: String,
}

#[derive(Args, Debug, Serialize)]
pub struct ExactQaArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Annealing time.
    #[arg(long)]
    pub tau: f64,
    #[arg(long, default_value_t = 2.5)]
    pub gamma0: f64,
    /// RK4 step: a number, `default` for min(1e-2, tau/1e5), or `auto` for
    /// the largest step that keeps the frame orthonormal.
    #[arg(long, default_value = "default")]
    pub dt: String,
    /// Time between output rows (default: tau/200).
    #[arg(long)]
    pub stride: Option<f64>,
    #[arg(long, default_value = "exact_qa.csv")]
    pub output: String,
}

#[derive(Args, Debug, Serialize)]
pub struct PimcEqArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Transverse fields, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub gamma: Vec<f64>,
    /// Temperatures, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub temp: Vec<f64>,
    /// Trotter slice counts, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub trotter: Vec<usize>,
    /// Move families (`time`, `sw`, `wolff`), comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "time", value_parser = parse_moves)]
    pub moves: Vec<MoveFamily>,
    /// Monte Carlo steps per run.
    #[arg(long)]
    pub mcs: u64,
    /// Fixed burn-in; by default Geweke's diagnostic chooses it.
    #[arg(long)]
    pub burn: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub measure_every: u64,
    /// Independent runs per parameter point.
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    #[arg(long, default_value = "pimc_eq.csv")]
    pub output: String,
}

#[derive(Args, Debug, Serialize)]
pub struct SqaArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Annealing time in Monte Carlo steps.
    #[arg(long)]
    pub tau: u64,
    #[arg(long, default_value_t = 2.5)]
    pub gamma0: f64,
    #[arg(long)]
    pub trotter: usize,
    #[arg(long)]
    pub temp: f64,
    #[arg(long, default_value = "time", value_parser = parse_moves)]
    pub moves: MoveFamily,
    #[arg(long, default_value_t = sqa_core::annealing::DEFAULT_REPS)]
    pub reps: usize,
    /// Steps between output rows.
    #[arg(long, default_value_t = 1)]
    pub stride: u64,
    /// Equilibration steps at the initial field (default max(1000, tau/10)).
    #[arg(long)]
    pub t_eq: Option<u64>,
    #[arg(long, default_value = "sqa.csv")]
    pub output: String,
}

#[derive(Args, Debug, Serialize)]
pub struct FitTeffArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Trajectory CSV from `sqa` or `exact-qa`.
    #[arg(long)]
    pub input: PathBuf,
    /// Residual-energy column (default: `eps_res` or `eps_avg_mean`).
    #[arg(long)]
    pub column: Option<String>,
    /// Field window `lo:hi`.
    #[arg(long, default_value = "0:1.5", value_parser = parse_range)]
    pub window: (f64, f64),
    /// Temperature search range `lo:hi`.
    #[arg(long, default_value = "0.001:10", value_parser = parse_range)]
    pub t_range: (f64, f64),
    #[arg(long, default_value = "fit_teff.json")]
    pub output: String,
}

#[derive(Args, Debug, Serialize)]
pub struct FitScalingArgs {
    /// CSV with one row per annealing time.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "tau")]
    pub x_column: String,
    /// Residual-energy column (default: `eps_res` or `eps_avg_mean`).
    #[arg(long)]
    pub column: Option<String>,
    /// Annealing-time window `lo:hi` (power law default: central decade).
    #[arg(long, value_parser = parse_range)]
    pub window: Option<(f64, f64)>,
    /// Output JSON (default: `fit_powerlaw.json` or `fit_loglaw.json`).
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureId {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl FigureId {
    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig1 => "fig1",
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct FigureArgs {
    pub id: FigureId,
    /// Use this chain instead of drawing one (disordered figures only).
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Seed of the drawn disordered chain.
    #[arg(long, default_value_t = 1)]
    pub instance_seed: u64,
    /// Override the preset chain length.
    #[arg(long)]
    pub length: Option<usize>,
    /// Override the preset temperature.
    #[arg(long)]
    pub temp: Option<f64>,
    /// Override the preset Trotter slice counts.
    #[arg(long, value_delimiter = ',')]
    pub trotter: Option<Vec<usize>>,
    /// Override the preset annealing times.
    #[arg(long, value_delimiter = ',')]
    pub tau: Option<Vec<f64>>,
    /// Override the preset number of repetitions.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Override the preset PIMC run length (fig1).
    #[arg(long)]
    pub mcs: Option<u64>,
}

#[derive(Args, Debug, Serialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
        let names: Vec<String> = Cli::command()
            .get_subcommands()
            .map(|c| c.get_name().to_string())
            .collect();
        assert_eq!(names, SUBCOMMANDS);
    }

    #[test]
    fn grid_includes_end() {
        let g = parse_grid("0:1:0.25").unwrap();
        assert_eq!(g.points(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("0:0.3:0.1").unwrap().points().len(), 4);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("0:1").is_err());
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0:1.5").unwrap(), (0.0, 1.5));
        assert!(parse_range("2:1").is_err());
    }
}
