//! `qgspec` command line: graph file in, CSV/JSON tables, SVG plots and a manifest out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

mod commands;
pub mod output;
pub mod plot;

pub use output::Format;

/// Default output directory when `--out` is not given.
pub const OUT_ENV: &str = "QGSPEC_OUT";

#[derive(Parser, Debug)]
#[command(name = "qgspec", version, about = "Spectra and spectral statistics of scaling quantum graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub config: RunConfig,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Primitive periodic orbits and their repetitions up to `--l` scattering events.
    Orbits,
    /// Terms of the recentered spectral determinant.
    Determinant,
    /// Eigenvalues k_n and fluctuations δ_n for n = 1..=N.
    Spectrum,
    /// Roots of every derivative level from the regular one down to the spectrum.
    Hierarchy,
    /// Histogram of δ_n at `--level`.
    StatsDelta,
    /// Histogram of spacings k_{n+m} − k_n in mean spacings.
    StatsSpacing,
    /// Random-phase Monte Carlo of δ (no `--m`) or of s_m from the orbit series.
    StatsMc,
    /// Cascade of fluctuation distributions from the regular level down to level 0.
    Propagate,
    /// Trace identity, interlacing, reality and Weyl checks; fails unless all pass.
    Verify,
    /// SVG from tables written by the other subcommands.
    Plot {
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum)]
        reference: Vec<Reference>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    Wigner,
    Poisson,
    Gaussian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Torus {
    Constrained,
    Full,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RunConfig {
    /// Graph description file.
    #[arg(long, global = true)]
    pub graph: Option<PathBuf>,
    /// Replace the bond lengths: `--lengths random-irrational SEED`.
    #[arg(long, global = true, num_args = 2, value_names = ["KIND", "SEED"])]
    pub lengths: Vec<String>,
    /// Number of eigenvalues.
    #[arg(long, global = true, default_value_t = 1000, value_parser = positive)]
    pub n: usize,
    /// Orbit cutoff in scattering events; also the density expansion order.
    #[arg(long, global = true, default_value_t = 6, value_parser = positive)]
    pub l: usize,
    /// Monte Carlo samples.
    #[arg(long, global = true, default_value_t = 100_000, value_parser = positive)]
    pub samples: usize,
    /// Hierarchy level j.
    #[arg(long, global = true, default_value_t = 0)]
    pub level: usize,
    /// Spacing order.
    #[arg(long, global = true)]
    pub m: Option<usize>,
    #[arg(long, global = true, default_value_t = 100)]
    pub bins: usize,
    /// Histogram range `LO,HI`.
    #[arg(long, global = true, value_parser = parse_range, allow_hyphen_values = true)]
    pub range: Option<(f64, f64)>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Torus::Constrained)]
    pub torus: Torus,
    /// Worker threads (all cores when omitted).
    #[arg(long, global = true, value_parser = positive)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, env = OUT_ENV, default_value = "qgspec-out")]
    pub out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Also write plot.svg.
    #[arg(long, global = true)]
    pub plot: bool,
}

fn positive(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected LO,HI")?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if !(lo < hi) {
        return Err(format!("empty range {lo},{hi}"));
    }
    Ok((lo, hi))
}

/// A check that ran and failed; `hierarchy` selects exit code 2.
#[derive(Debug)]
pub struct CheckFailed {
    pub hierarchy: bool,
    pub what: String,
}

impl fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "check failed: {}", self.what)
    }
}

impl std::error::Error for CheckFailed {}

pub fn exit_code(e: &anyhow::Error) -> i32 {
    let hierarchy = e.chain().any(|c| {
        matches!(c.downcast_ref::<qgspec::Error>(), Some(qgspec::Error::HierarchyViolation { .. }))
            || c.downcast_ref::<CheckFailed>().is_some_and(|f| f.hierarchy)
    });
    if hierarchy {
        2
    } else {
        1
    }
}

/// Parse `argv` (program name first), run, and return the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let args: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(&cli, &args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli, args: &[String]) -> Result<()> {
    let cfg = &cli.config;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().context("starting worker pool")?;
    pool.install(|| {
        let mut out = output::OutputDir::create(&cfg.out, cfg.format)?;
        let outcome = commands::dispatch(&cli.command, cfg, &mut out)?;
        out.json("summary.json", &outcome.summary)?;
        let manifest = json!({
            "tool": "qgspec",
            "version": env!("CARGO_PKG_VERSION"),
            "command": cli.command,
            "argv": args,
            "config": cfg,
            "graph": outcome.graph,
            "seed": cfg.seed,
        });
        let path = out.finish(manifest)?;
        log::info!("wrote {}", path.display());
        match outcome.failure {
            Some(f) => Err(f.into()),
            None => Ok(()),
        }
    })
}
