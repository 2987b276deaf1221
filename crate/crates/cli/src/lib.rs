//! Command-line driver: subcommands, config files, manifests and the
//! figure pipelines.
//!
//! Every subcommand writes its outputs plus a `<name>.manifest.json` into
//! the output directory. `sqa replay <manifest>` re-runs the recorded
//! arguments and checks that every output comes back byte-identical.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod figures;
pub mod manifest;
pub mod sweep;
pub mod table;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;

use crate::args::{Cli, Command, GlobalArgs, SUBCOMMANDS};
use crate::config::Config;
use crate::error::{CliError, CliResult, EXIT_OK, EXIT_VALIDATION};
use crate::manifest::{RunManifest, RunStatus};
use crate::table::Schema;

/// Where and how one invocation writes.
#[derive(Clone, Debug)]
pub struct Context {
    pub seed: u64,
    pub workers: usize,
    pub out_dir: PathBuf,
    pub max_mcs: Option<u64>,
    pub desk_scale: bool,
    /// Arguments recorded in manifests.
    pub argv: Vec<String>,
}

impl Context {
    pub fn new(out_dir: impl Into<PathBuf>, seed: u64, workers: usize) -> Self {
        Context {
            seed,
            workers,
            out_dir: out_dir.into(),
            max_mcs: None,
            desk_scale: false,
            argv: Vec::new(),
        }
    }

    fn from_global(g: &GlobalArgs, argv: Vec<String>) -> Self {
        Context {
            seed: g.seed,
            workers: g.workers.unwrap_or_else(default_workers),
            out_dir: g.out_dir.clone().unwrap_or_else(|| PathBuf::from(".")),
            max_mcs: g.max_mcs,
            desk_scale: g.desk_scale,
            argv,
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// Writes `bytes` to `name` in the output directory and records it.
    pub fn emit(&self, manifest: &mut RunManifest, name: &str, bytes: &[u8], schema: Schema) -> CliResult<()> {
        let path = self.path(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        manifest.record_output(name, bytes, schema.name);
        Ok(())
    }

    /// Refuses work beyond `--max-mcs`.
    pub fn check_budget(&self, what: &str, estimate: u64) -> CliResult<()> {
        match self.max_mcs {
            Some(max) if estimate > max => Err(CliError::Invalid(format!(
                "{what} needs an estimated {estimate} Monte Carlo steps, above --max-mcs {max}"
            ))),
            _ => Ok(()),
        }
    }

    /// Saves the manifest as `<stem>.manifest.json`; a run with failed
    /// points is saved as partial and reported as an error.
    pub fn finish(&self, mut manifest: RunManifest, stem: &str, failures: Vec<String>, total: usize) -> CliResult<PathBuf> {
        if !failures.is_empty() {
            manifest.status = RunStatus::Partial;
            manifest.failures = failures.clone();
        }
        let path = self.path(&format!("{stem}.manifest.json"));
        manifest.save(&path)?;
        if let Some(first) = failures.first() {
            return Err(CliError::Partial {
                failed: failures.len(),
                total,
                first: first.clone(),
            });
        }
        Ok(path)
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Flags that describe the environment rather than the computation.
const UNRECORDED: [&str; 3] = ["--out-dir", "--workers", "--config"];

fn recorded_argv(argv: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in argv {
        if skip {
            skip = false;
            continue;
        }
        if UNRECORDED.contains(&a.as_str()) {
            skip = true;
            continue;
        }
        if UNRECORDED.iter().any(|f| a.starts_with(&format!("{f}="))) {
            continue;
        }
        out.push(a.clone());
    }
    out
}

fn find_config(argv: &[String]) -> CliResult<Option<PathBuf>> {
    for (i, a) in argv.iter().enumerate() {
        if a == "--config" {
            return argv
                .get(i + 1)
                .map(|p| Some(PathBuf::from(p)))
                .ok_or_else(|| CliError::Invalid("--config needs a path".into()));
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Ok(Some(PathBuf::from(p)));
        }
    }
    Ok(None)
}

/// What a successful invocation produced.
#[derive(Debug)]
pub struct Report {
    pub manifest: Option<PathBuf>,
    /// Printed on stdout.
    pub message: String,
}

/// Parses `argv` (program name first), merges the config file and runs the
/// subcommand.
pub fn execute(argv: &[String]) -> CliResult<Report> {
    let mut argv = argv.to_vec();
    if let Some(path) = find_config(&argv)? {
        let config = Config::load(&path)?;
        if let Some(sub) = argv.iter().skip(1).find(|a| SUBCOMMANDS.contains(&a.as_str())) {
            let extra = config.flags_for(&sub.clone(), &argv)?;
            argv.extend(extra);
        }
    }
    let cli = Cli::try_parse_from(&argv).map_err(|e| CliError::Invalid(e.to_string()))?;
    let ctx = Context::from_global(&cli.global, recorded_argv(&argv[1..]));
    if let Command::Replay(r) = &cli.command {
        return replay(&r.manifest, &cli.global);
    }
    fs::create_dir_all(&ctx.out_dir).map_err(|e| CliError::io(&ctx.out_dir, e))?;
    commands::dispatch(&cli.command, &ctx)
}

/// Re-runs the arguments recorded in a manifest into a fresh directory and
/// compares output checksums.
pub fn replay(manifest_path: &Path, global: &GlobalArgs) -> CliResult<Report> {
    let original = RunManifest::load(manifest_path)?;
    if original.subcommand == "replay" {
        return Err(CliError::Invalid("cannot replay a replay".into()));
    }
    let out_dir = global.out_dir.clone().unwrap_or_else(|| {
        manifest_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join("replay")
    });
    let mut argv = vec!["sqa".to_string()];
    argv.extend(original.argv.iter().cloned());
    argv.push("--out-dir".into());
    argv.push(out_dir.display().to_string());
    if let Some(w) = global.workers {
        argv.push("--workers".into());
        argv.push(w.to_string());
    }
    let report = execute(&argv)?;
    let fresh_path = report
        .manifest
        .ok_or_else(|| CliError::Runtime("replayed run wrote no manifest".into()))?;
    let fresh = RunManifest::load(&fresh_path)?;
    let mut lines = Vec::new();
    let mut mismatches = 0;
    if fresh.instance_sha256 != original.instance_sha256 {
        mismatches += 1;
        lines.push("instance checksum differs".to_string());
    }
    for out in &original.outputs {
        let got = fresh.outputs.iter().find(|o| o.path == out.path);
        let verdict = match got {
            Some(o) if o.sha256 == out.sha256 => "identical",
            Some(_) => {
                mismatches += 1;
                "DIFFERS"
            }
            None => {
                mismatches += 1;
                "MISSING"
            }
        };
        lines.push(format!("{}: {verdict}", out.path));
    }
    if mismatches > 0 {
        return Err(CliError::Runtime(format!(
            "replay of {} does not match:\n{}",
            manifest_path.display(),
            lines.join("\n")
        )));
    }
    Ok(Report {
        manifest: Some(fresh_path),
        message: lines.join("\n"),
    })
}

/// Entry point of the binary; returns the process exit status.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString>,
{
    let argv: Vec<String> = args
        .into_iter()
        .map(|a| a.into().to_string_lossy().into_owned())
        .collect();
    // help and version go through clap directly so they exit cleanly
    if let Err(e) = Cli::try_parse_from(&argv) {
        use clap::error::ErrorKind;
        if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
            let _ = e.print();
            return EXIT_OK;
        }
        if find_config(&argv).ok().flatten().is_none() {
            let _ = e.print();
            return EXIT_VALIDATION;
        }
    }
    match execute(&argv) {
        Ok(report) => {
            if !report.message.is_empty() {
                println!("{}", report.message);
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
