//! Command-line front end: `topo`, `sweep` and `fit`.
//!
//! [`run`] parses arguments, executes one command and returns the process
//! exit status: 0 when every requested output was written, 1 on a runtime
//! failure, 2 on a usage error.

pub mod config;
pub mod recipes;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{fit_log_cubic, fit_polynomial, fit_sigmoid, read_xy_csv_path, FitReport, LogBase};
use crate::channel::{BellRedundancy, ChannelParams};
use crate::error::{Error, Result};
use crate::experiments::{
    default_distance_grid, run_burst_sweep, run_distance_sweep, SweepConfig, SweepResult, DEFAULT_MAX_PATHS,
    DEFAULT_ROUNDS,
};
use crate::keymgmt::DEFAULT_QBER_SAMPLE;
use crate::protocols::{Protocol, ProtocolSpec};
use crate::topology::{build_topology, ShapeParams, TopologyKind};
use config::{config_tokens, parse_bursts, parse_distances};
use recipes::{run_recipe, Recipe, RecipeSettings};

#[derive(Debug, Parser)]
#[command(name = "qkdsim", version, about = "QKD network Monte Carlo simulator")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Worker threads; results do not depend on this value.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Suppress progress messages on stderr.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Build a topology and write it in adjacency text format.
    Topo(TopoArgs),
    /// Run a distance or burst sweep, or a built-in recipe.
    Sweep(SweepArgs),
    /// Fit a model to an x,y CSV.
    Fit(FitArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ShapeArgs {
    #[arg(long, default_value = "direct")]
    pub kind: TopologyKind,
    /// Torus side.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Grid side.
    #[arg(long, default_value_t = 3)]
    pub g: usize,
    /// Ring size.
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    /// Star leaves, Alice and Bob included.
    #[arg(long, default_value_t = 4)]
    pub leaves: usize,
    /// Interior trusted nodes of a line.
    #[arg(long, default_value_t = 1)]
    pub n_trusted: usize,
}

impl ShapeArgs {
    pub fn shape(&self) -> ShapeParams {
        ShapeParams {
            n_trusted: self.n_trusted,
            star_leaves: self.leaves,
            ring_nodes: self.m,
            grid_side: self.g,
            torus_side: self.k,
        }
    }
}

#[derive(Debug, Args)]
pub struct TopoArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// Alice-Bob distance, km.
    #[arg(long = "L", default_value_t = 10.0)]
    pub length: f64,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Plotdata,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BellRedundancyArg {
    Pairs,
    Swaps,
    PairsAndSwaps,
}

impl From<BellRedundancyArg> for BellRedundancy {
    fn from(v: BellRedundancyArg) -> Self {
        match v {
            BellRedundancyArg::Pairs => BellRedundancy::Pairs,
            BellRedundancyArg::Swaps => BellRedundancy::Swaps,
            BellRedundancyArg::PairsAndSwaps => BellRedundancy::PairsAndSwaps,
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Run file of `key = value` lines; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// Single distance, km; ignored when --distances is given.
    #[arg(long = "L")]
    pub length: Option<f64>,
    #[arg(long, default_value = "3-stage")]
    pub protocol: Protocol,
    /// Photons per 3-stage burst.
    #[arg(long, default_value_t = 10)]
    pub burst: u64,
    #[arg(long, default_value_t = DEFAULT_ROUNDS)]
    pub rounds: u64,
    #[arg(long, env = "QKDSIM_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Fiber attenuation, dB/km.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub decoherence: Option<f64>,
    /// Bell-state measurement success probability.
    #[arg(long)]
    pub bsm: Option<f64>,
    /// Parallel Bell attempts.
    #[arg(long)]
    pub redundancy: Option<u32>,
    #[arg(long, value_enum)]
    pub bell_redundancy: Option<BellRedundancyArg>,
    /// `start:stop:step` or `d1,d2,...` in km.
    #[arg(long, value_parser = parse_distances_arg)]
    pub distances: Option<Grid<f64>>,
    /// Burst sizes (3-stage) or Bell redundancies (E91); one curve each.
    #[arg(long, value_parser = parse_bursts_arg)]
    pub bursts: Option<Grid<u64>>,
    #[arg(long, default_value_t = DEFAULT_MAX_PATHS)]
    pub max_paths: usize,
    #[arg(long, default_value_t = DEFAULT_QBER_SAMPLE)]
    pub qber_sample: f64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "csv")]
    pub format: Vec<Format>,
    #[arg(long)]
    pub recipe: Option<Recipe>,
}

/// A list given as one flag value.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T>(pub Vec<T>);

fn parse_distances_arg(s: &str) -> Result<Grid<f64>> {
    parse_distances(s).map(Grid)
}

fn parse_bursts_arg(s: &str) -> Result<Grid<u64>> {
    parse_bursts(s).map(Grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Sigmoid,
    Poly3,
    Logcubic,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with an x,y header or sweep output.
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "sigmoid")]
    pub model: Model,
    /// Logarithm base of the log-cubic model.
    #[arg(long, default_value = "10", value_parser = ["10", "e"])]
    pub log_base: String,
    /// Output directory for the report and residual CSV; defaults to the input's directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SweepArgs {
    fn channel(&self) -> ChannelParams {
        let d = ChannelParams::default();
        ChannelParams {
            alpha: self.alpha.unwrap_or(d.alpha),
            decoherence: self.decoherence.unwrap_or(d.decoherence),
            bsm_success: self.bsm.unwrap_or(d.bsm_success),
            redundancy: self.redundancy.unwrap_or(d.redundancy),
            bell_redundancy: self.bell_redundancy.map_or(d.bell_redundancy, Into::into),
        }
    }

    fn distances_km(&self) -> Option<Vec<f64>> {
        self.distances.clone().map(|g| g.0).or_else(|| self.length.map(|l| vec![l]))
    }

    /// Sweep configuration described by the flags, recipes aside.
    pub fn sweep_config(&self) -> SweepConfig {
        let mut spec = ProtocolSpec::for_protocol(self.protocol);
        spec.burst_size = self.burst;
        let mut cfg = SweepConfig::distances(
            self.shape.kind,
            self.shape.shape(),
            spec,
            self.distances_km().unwrap_or_else(default_distance_grid),
        )
        .with_rounds(self.rounds)
        .with_seed(self.seed)
        .with_channel(self.channel())
        .with_max_paths(self.max_paths);
        cfg.qber_sample = self.qber_sample;
        if let Some(b) = &self.bursts {
            cfg = cfg.with_bursts(b.0.clone());
        }
        cfg
    }
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match splice_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            1
        }
    }
}

/// Inserts the run-file entries right after the `sweep` token so that any
/// flag on the command line, coming later, takes precedence.
fn splice_config(mut args: Vec<OsString>) -> Result<Vec<OsString>> {
    // the subcommand is the first token that is neither a flag nor the --threads value
    let mut sub = None;
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if a == "--threads" {
            i += 2;
        } else if a.starts_with('-') {
            i += 1;
        } else {
            sub = Some(i);
            break;
        }
    }
    let Some(sub) = sub.filter(|&i| args[i] == "sweep") else {
        return Ok(args);
    };
    let mut path = None;
    for (i, a) in args.iter().enumerate().skip(sub + 1) {
        let a = a.to_string_lossy();
        if a == "--config" {
            path = args.get(i + 1).map(PathBuf::from);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
    }
    if let Some(p) = path {
        let tokens = config_tokens(&p).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?;
        args.splice(sub + 1..sub + 1, tokens.into_iter().map(OsString::from));
    }
    Ok(args)
}

fn execute(cli: &Cli) -> Result<()> {
    let go = || match &cli.command {
        Command::Topo(a) => cmd_topo(a),
        Command::Sweep(a) => cmd_sweep(a, cli.quiet),
        Command::Fit(a) => cmd_fit(a),
    };
    match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?
            .install(go),
        None => go(),
    }
}

pub fn cmd_topo(a: &TopoArgs) -> Result<()> {
    let topo = build_topology(a.shape.kind, a.length, &a.shape.shape())?;
    let text = topo.to_adjacency_text();
    match &a.out {
        Some(path) => write_file(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn cmd_sweep(a: &SweepArgs, quiet: bool) -> Result<()> {
    if let Some(recipe) = a.recipe {
        let settings = RecipeSettings {
            rounds: a.rounds,
            seed: a.seed,
            channel: a.channel(),
            distances_km: a.distances_km(),
            bursts: a.bursts.clone().map(|g| g.0),
            max_paths: a.max_paths,
        };
        if !quiet {
            eprintln!("running recipe {recipe}");
        }
        let out = run_recipe(recipe, &settings)?;
        let dir = a.out.join(recipe.as_str());
        for c in &out.curves {
            write_curve(&dir, &c.name, &c.result, &a.format)?;
        }
        for (name, text) in &out.extras {
            write_file(&dir.join(name), text)?;
        }
        return Ok(());
    }
    let cfg = a.sweep_config();
    if cfg.bursts.is_empty() {
        let result = run_distance_sweep(&cfg)?;
        write_curve(&a.out, "sweep", &result, &a.format)
    } else {
        let result = run_burst_sweep(&cfg)?;
        for c in &result.curves {
            write_curve(&a.out, &format!("sweep-b{}", c.burst), &c.result, &a.format)?;
        }
        Ok(())
    }
}

fn write_curve(dir: &Path, name: &str, r: &SweepResult, formats: &[Format]) -> Result<()> {
    for f in formats {
        match f {
            Format::Csv => write_file(&dir.join(format!("{name}.csv")), &r.to_csv_string()?)?,
            Format::Json => write_file(&dir.join(format!("{name}.json")), &r.to_json()?)?,
            Format::Plotdata => write_file(&dir.join(format!("{name}.dat")), &r.to_plotdata())?,
        }
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn cmd_fit(a: &FitArgs) -> Result<()> {
    let (xs, ys) = read_xy_csv_path(&a.input)?;
    let (name, report) = match a.model {
        Model::Sigmoid => {
            let fit = match fit_sigmoid(&xs, &ys) {
                Ok(f) => f,
                Err(Error::NonConvergence { iterations, best }) => {
                    eprint!("{}", FitReport::sigmoid(&best, &xs, &ys).to_text());
                    return Err(Error::NonConvergence { iterations, best });
                }
                Err(e) => return Err(e),
            };
            ("sigmoid", FitReport::sigmoid(&fit, &xs, &ys))
        }
        Model::Poly3 => ("poly3", FitReport::polynomial(&fit_polynomial(&xs, &ys, 3)?, &xs, &ys)),
        Model::Logcubic => {
            let base = if a.log_base == "e" { LogBase::E } else { LogBase::Ten };
            ("logcubic", FitReport::log_cubic(&fit_log_cubic(&xs, &ys, base)?, &xs, &ys))
        }
    };
    let text = report.to_text();
    print!("{text}");
    let dir = match &a.out {
        Some(d) => d.clone(),
        None => a.input.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let stem = a.input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "input".into());
    write_file(&dir.join(format!("{stem}.{name}.txt")), &text)?;
    let mut buf = Vec::new();
    report.write_residual_csv(&mut buf)?;
    write_file(&dir.join(format!("{stem}.{name}.residuals.csv")), &String::from_utf8_lossy(&buf))
}
