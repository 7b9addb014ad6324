//! `cutquant`: spectra, cut verification, projections and rigging studies
//! from the command line.
//!
//! Exit codes: 0 success, 1 scientific negative (mismatch, tolerance
//! exceeded, example not reproduced), 2 usage or input error.

mod commands;
mod manifest;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use chrono::Utc;
use clap::{Args, Parser, Subcommand, ValueEnum};

use cutquant::rational::{self, Q};
use manifest::{write_atomic, RunConfig, RunManifest};

const OUT_ENV: &str = "CUTQUANT_OUT";
const DEFAULT_OUT: &str = "cutquant-out";

#[derive(Parser, Debug)]
#[command(name = "cutquant", version, about = "Projection quantization and quantum symplectic cuts")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

fn parse_q(s: &str) -> Result<Q, String> {
    rational::parse(s).map_err(|e| e.to_string())
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Planck constant as p/q.
    #[arg(long, global = true, value_parser = parse_q, default_value = "1/1")]
    pub hbar: Q,
    /// Sector angle theta in (0,1], as p/q (default 1).
    #[arg(long, global = true, value_parser = parse_q, allow_hyphen_values = true)]
    pub theta: Option<Q>,
    /// Sector truncation n_max (default 10).
    #[arg(long, global = true)]
    pub nmax: Option<usize>,
    /// Relative-error tolerance for `rig`.
    #[arg(long, global = true, default_value_t = 1e-3)]
    pub tol: f64,
    /// Output directory; the CUTQUANT_OUT variable takes precedence.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print a sorted spectrum.
    Spectrum(SpectrumArgs),
    /// Constraint-kernel checks.
    Cut {
        #[command(subcommand)]
        action: CutAction,
    },
    /// Positive or interval spectral projection with a regularity report.
    Project(ProjectArgs),
    /// Group-averaging convergence study from a fixture file.
    Rig(RigArgs),
    /// Built-in example systems.
    Examples {
        #[command(subcommand)]
        action: ExamplesAction,
    },
    /// Re-run the command recorded in a manifest and compare outputs.
    Rerun { manifest: PathBuf },
}

#[derive(Args, Debug, Clone)]
pub struct Source {
    /// Built-in example name.
    #[arg(long, conflicts_with = "operator")]
    pub example: Option<String>,
    /// JSON file describing a diagonal operator.
    #[arg(long)]
    pub operator: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    /// Spectrum of the C* factor for --theta and --nmax.
    #[arg(long, conflicts_with_all = ["example", "operator"])]
    pub cstar: bool,
    /// Use the half-form corrected C* spectrum n + 1/2.
    #[arg(long)]
    pub metaplectic: bool,
    #[command(flatten)]
    pub source: Source,
}

#[derive(Subcommand, Debug)]
enum CutAction {
    /// Compare the constraint kernel with the positive projection.
    Verify {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        metaplectic: bool,
    },
}

#[derive(Args, Debug)]
pub struct ProjectArgs {
    #[command(flatten)]
    pub source: Source,
    /// Keep the open band LO < f < HI instead of f > 0.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], value_parser = parse_q, allow_hyphen_values = true)]
    pub interval: Option<Vec<Q>>,
    /// Removed fraction below which a projection counts as near-trivial.
    #[arg(long, value_parser = parse_q)]
    pub near_trivial: Option<Q>,
}

#[derive(Args, Debug)]
pub struct RigArgs {
    #[arg(long)]
    pub fixture: PathBuf,
}

#[derive(Subcommand, Debug)]
enum ExamplesAction {
    List,
    Run { name: String },
}

fn out_dir(flag: Option<&Path>, fallback: &Path) -> PathBuf {
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => flag.map(Path::to_path_buf).unwrap_or_else(|| fallback.to_path_buf()),
    }
}

fn stem(command: &Command) -> String {
    match command {
        Command::Spectrum(_) => "spectrum".into(),
        Command::Cut { .. } => "cut_verify".into(),
        Command::Project(_) => "project".into(),
        Command::Rig(_) => "rig".into(),
        Command::Examples {
            action: ExamplesAction::List,
        } => "examples_list".into(),
        Command::Examples {
            action: ExamplesAction::Run { name },
        } => format!("example_{name}"),
        Command::Rerun { .. } => "rerun".into(),
    }
}

fn dispatch(cli: &Cli) -> Result<commands::Outcome> {
    let g = &cli.global;
    match &cli.command {
        Command::Spectrum(a) => commands::spectrum(g, a),
        Command::Cut {
            action: CutAction::Verify { source, metaplectic },
        } => commands::cut_verify(g, source, *metaplectic),
        Command::Project(a) => commands::project(g, a),
        Command::Rig(a) => commands::rig(g, a),
        Command::Examples {
            action: ExamplesAction::List,
        } => commands::examples_list(g),
        Command::Examples {
            action: ExamplesAction::Run { name },
        } => commands::examples_run(g, name),
        Command::Rerun { .. } => bail!("a manifest cannot record a rerun"),
    }
}

/// Runs one command, writes its artifacts and manifest into `dir`.
fn execute(cli: &Cli, argv: &[String], dir: &Path) -> Result<(commands::Outcome, RunManifest)> {
    let started_at = Utc::now();
    let outcome = dispatch(cli)?;
    let mut outputs = Vec::new();
    for a in &outcome.artifacts {
        write_atomic(dir, &a.name, &a.bytes)?;
        outputs.push(a.name.clone());
    }
    let g = &cli.global;
    let manifest = RunManifest {
        tool: "cutquant".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: argv.to_vec(),
        config: RunConfig {
            hbar: rational::format(&g.hbar),
            theta: g.theta.as_ref().map(rational::format),
            nmax: g.nmax,
            tol: g.tol,
            format: g.format.map(|f| format!("{f:?}").to_lowercase()),
        },
        started_at,
        finished_at: Utc::now(),
        working_dir: std::env::current_dir()?,
        out_dir: dir.to_path_buf(),
        outputs,
        exit_code: outcome.exit_code,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write_atomic(dir, &format!("{}.manifest.json", stem(&cli.command)), text.as_bytes())?;
    Ok((outcome, manifest))
}

fn rerun(path: &Path, flag_out: Option<&Path>) -> Result<i32> {
    let recorded = RunManifest::load(path)?;
    let argv: Vec<String> = recorded.command.clone();
    let cli = Cli::try_parse_from(std::iter::once("cutquant".to_string()).chain(argv.iter().cloned()))?;
    if matches!(cli.command, Command::Rerun { .. }) {
        bail!("manifest {} records a rerun", path.display());
    }
    let before: Vec<(String, Option<Vec<u8>>)> = recorded
        .outputs
        .iter()
        .zip(recorded.output_paths())
        .map(|(name, p)| (name.clone(), std::fs::read(p).ok()))
        .collect();
    let dir = std::path::absolute(out_dir(flag_out, &recorded.resolved_out_dir()))?;
    std::env::set_current_dir(&recorded.working_dir)?;
    let (outcome, _) = execute(&cli, &argv, &dir)?;

    let mut differing = Vec::new();
    for (name, old) in &before {
        let new = outcome.artifacts.iter().find(|a| &a.name == name).map(|a| &a.bytes);
        if old.as_ref() != new {
            differing.push(name.as_str());
        }
    }
    if outcome.exit_code != recorded.exit_code {
        eprintln!("exit code changed: {} -> {}", recorded.exit_code, outcome.exit_code);
        return Ok(1);
    }
    if differing.is_empty() {
        eprintln!("reproduced {} output(s) byte-identically in {}", before.len(), dir.display());
        Ok(0)
    } else {
        eprintln!("outputs differ from the recorded run: {}", differing.join(", "));
        Ok(1)
    }
}

fn run() -> Result<i32> {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    if let Command::Rerun { manifest } = &cli.command {
        return rerun(manifest, cli.global.out.as_deref());
    }
    let dir = out_dir(cli.global.out.as_deref(), Path::new(DEFAULT_OUT));
    let (outcome, _) = execute(&cli, &argv, &dir)?;
    if let Some(first) = outcome.artifacts.first() {
        std::io::stdout().write_all(&first.bytes)?;
    }
    eprintln!("{}", outcome.summary);
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
