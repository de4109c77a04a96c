//! `basinforge`: basins of attracting automorphism sequences from JSON specs.
//!
//! Every run writes a manifest. Exit codes: 0 success, 1 usage or input
//! error, 2 numeric failure (a violated precondition or residual bound).

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use manifest::{Run, RunManifest};

#[derive(Parser, Debug)]
#[command(name = "basinforge", version, about = "Basins of non-autonomous attracting sequences in C^2")]
struct Cli {
    /// Cap on worker threads (rasters, chains, sweeps).
    #[arg(long, global = true, env = "BASINFORGE_THREADS")]
    threads: Option<usize>,
    /// Manifest path; by default it sits next to the main output.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Raster the exhaustion index over a real 2-plane.
    Basin(BasinArgs),
    /// Lower triangular normal form of a single map.
    Normalform(NormalformArgs),
    /// Build the train conjugacy chain of a sequence.
    Trains(TrainsArgs),
    /// Trajectories of the candidate biholomorphism at given points.
    Biholo(BiholoArgs),
    /// Approximate an entire curve through a point.
    Curve(CurveArgs),
    /// Report sampled uniform contraction bounds.
    Verify(VerifyArgs),
    /// Run verify or trains over a parameter grid.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct BasinArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Slice geometry JSON.
    #[arg(long)]
    pub slice: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    /// Membership radius; defaults to the largest clean radius of `verify`.
    #[arg(long)]
    pub radius: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct NormalformArgs {
    /// Polynomial map JSON (`first`/`second` term lists).
    #[arg(long)]
    pub map: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct TrainsArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Overrides the order of contact stored in the spec.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub nmax: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct BiholoArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub chain: PathBuf,
    /// CSV of `re1,im1,re2,im2` rows; a header row is skipped.
    #[arg(long)]
    pub points: PathBuf,
    /// Last `n`; defaults to the chain's horizon.
    #[arg(long)]
    pub nmax: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    #[arg(long)]
    pub radius: Option<f64>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct CurveArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// `re1,im1,re2,im2`.
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
    /// Tangent direction, same format as `--point`.
    #[arg(long, allow_hyphen_values = true)]
    pub dir: String,
    #[arg(long)]
    pub radius: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    /// Inner radius of the normalized disk on which the error is measured.
    #[arg(long, default_value_t = 0.5)]
    pub inner: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub nmax: usize,
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
    /// Report destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub template: PathBuf,
    /// `NAME=start:stop:step` over C, D, k, seed, short_a0 or coeff_bound;
    /// repeat for a product grid.
    #[arg(long, required = true)]
    pub param: Vec<String>,
    #[arg(long, value_enum, default_value_t = SweepRun::Verify)]
    pub run: SweepRun,
    #[arg(long, default_value_t = 100)]
    pub nmax: usize,
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SweepRun {
    Verify,
    Trains,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Basin(_) => "basin",
            Command::Normalform(_) => "normalform",
            Command::Trains(_) => "trains",
            Command::Biholo(_) => "biholo",
            Command::Curve(_) => "curve",
            Command::Verify(_) => "verify",
            Command::Sweep(_) => "sweep",
        }
    }

    fn default_manifest(&self) -> PathBuf {
        use manifest::{beside, inside};
        match self {
            Command::Basin(a) => inside(&a.out),
            Command::Normalform(a) => beside(&a.out),
            Command::Trains(a) => beside(&a.out),
            Command::Biholo(a) => a.out.as_deref().map_or_else(|| "biholo.manifest.json".into(), beside),
            Command::Curve(a) => beside(&a.out),
            Command::Verify(a) => a.out.as_deref().map_or_else(|| "verify.manifest.json".into(), beside),
            Command::Sweep(a) => inside(&a.out),
        }
    }
}

/// Bad invocation detected after parsing; exit code 1.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn exit_code(err: &anyhow::Error) -> u8 {
    use basinforge::Error as E;
    for cause in err.chain() {
        if cause.is::<Usage>()
            || cause.is::<std::io::Error>()
            || cause.is::<serde_json::Error>()
            || cause.is::<csv::Error>()
        {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Io(_) | E::Json(_) | E::InvalidSpec(_) => 1,
                _ => 2,
            };
        }
    }
    2
}

/// The error chain joined by `: `, without causes already quoted by an outer message.
fn message(err: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in err.chain() {
        let s = cause.to_string();
        if msg.contains(&s) {
            continue;
        }
        if !msg.is_empty() {
            msg.push_str(": ");
        }
        msg.push_str(&s);
    }
    msg
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let start = Instant::now();
    let mut run = Run::default();
    let result = commands::dispatch(&cli.command, &mut run);
    let (code, error) = match &result {
        Ok(()) => (0, None),
        Err(e) => (exit_code(e), Some(message(e))),
    };
    let m = RunManifest {
        command: cli.command.name().to_string(),
        spec_hash: run.spec_hash,
        parameters: serde_json::to_value(&cli.command).unwrap_or_default(),
        version: env!("CARGO_PKG_VERSION"),
        threads: rayon::current_num_threads(),
        wall_clock_s: start.elapsed().as_secs_f64(),
        status: if code == 0 { "ok" } else { "failed" },
        exit_code: code,
        error: error.clone(),
        residuals: run.residuals,
        outputs: run.outputs,
    };
    let path = cli.manifest.unwrap_or_else(|| cli.command.default_manifest());
    if let Err(e) = m.write(&path) {
        eprintln!("error: could not write manifest {}: {e}", path.display());
        return ExitCode::from(if code == 0 { 1 } else { code });
    }
    if let Some(msg) = error {
        eprintln!("error: {msg}");
    }
    ExitCode::from(code)
}
