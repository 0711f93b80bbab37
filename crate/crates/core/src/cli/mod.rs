//! Command-line front end. Exit codes: 0 success, 1 usage or config error,
//! 2 simulation failure.

mod tools;
mod train;

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use waypoint_rl::{GridState, PidGains, TrainConfig};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    err: anyhow::Error,
}

impl CliError {
    pub fn usage(err: impl Into<anyhow::Error>) -> Self {
        CliError {
            code: EXIT_USAGE,
            err: err.into(),
        }
    }

    pub fn runtime(err: impl Into<anyhow::Error>) -> Self {
        CliError {
            code: EXIT_RUNTIME,
            err: err.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.err)
    }
}

impl From<waypoint_rl::Error> for CliError {
    fn from(e: waypoint_rl::Error) -> Self {
        if e.is_runtime() {
            CliError::runtime(e)
        } else {
            CliError::usage(e)
        }
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "waypoint-rl",
    version,
    about = "Grid-world Q-learning with PID-flown waypoint moves"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a Q-table, writing config, episode log, table, checkpoint and trajectories.
    Train(TrainArgs),
    /// Print the greedy path a saved Q-table takes from a start cell.
    Eval(EvalArgs),
    /// Fly a single step maneuver and report overshoot and settling time.
    Fly(FlyArgs),
    /// Solve for the optimal Q-table by value iteration.
    Oracle(OracleArgs),
    /// Render a CSV produced by another command as an SVG chart.
    Plot(PlotArgs),
    /// Check that flight dynamics leave learning unchanged.
    Equiv(EquivArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// JSON training config.
    #[arg(long)]
    pub config: PathBuf,
    /// Seed override (default: the config's `seed`).
    #[arg(long, conflicts_with = "seeds")]
    pub seed: Option<u64>,
    /// Train every seed in the half-open range A..B in parallel, one
    /// subdirectory `seed_<n>` per run.
    #[arg(long, value_parser = parse_seed_range, conflicts_with = "resume")]
    pub seeds: Option<(u64, u64)>,
    /// Output directory.
    #[arg(long, env = "WAYPOINT_RL_OUT")]
    pub out: PathBuf,
    /// Continue from a checkpoint written by an earlier run with the same config.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Skip flight simulation; moves complete instantly.
    #[arg(long)]
    pub no_dynamics: bool,
    /// End this invocation after N episodes; continue later with `--resume`.
    #[arg(long, value_name = "N")]
    pub stop_after: Option<u32>,
    /// Which maneuvers to save under `trajectories/`.
    #[arg(long, value_enum, default_value_t = TrajectoryCapture::Last)]
    pub trajectories: TrajectoryCapture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrajectoryCapture {
    None,
    /// Only the final episode.
    Last,
    All,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Q-table CSV.
    #[arg(long)]
    pub qtable: PathBuf,
    /// JSON config describing the grid the table was trained on.
    #[arg(long)]
    pub config: PathBuf,
    /// Start cell as X,Y (default: the config's `start`).
    #[arg(long, value_parser = parse_cell)]
    pub start: Option<GridState>,
    /// Also write the visited cells as a `step,x,y` CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FlyArgs {
    /// Controller gains as KP,KI,KD.
    #[arg(long, value_parser = parse_gains, default_value = "0.8,0,0.9")]
    pub gains: PidGains,
    /// Step size in meters along +x.
    #[arg(long = "step-m", default_value_t = 1.0)]
    pub step_m: f64,
    /// Trajectory CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Simulated seconds to hold the setpoint (default: the plant timeout, 30 s).
    #[arg(long)]
    pub duration: Option<f64>,
    /// Acceptance radius in meters used for the settling time.
    #[arg(long, default_value_t = 0.3)]
    pub radius: f64,
    /// Optional JSON config supplying plant parameters.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// JSON config describing grid and discount factor.
    #[arg(long)]
    pub config: PathBuf,
    /// Q-table CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Discount factor override.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Bellman residual tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    /// Steps per episode from `episodes.csv`.
    Steps,
    /// Distance to the waypoint over time from a trajectory CSV.
    Error,
    /// Visited positions from any CSV with `x` and `y` columns.
    Path,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub kind: PlotKind,
    /// SVG file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Chart title (default depends on the kind).
    #[arg(long)]
    pub title: Option<String>,
}

#[derive(Debug, Args)]
pub struct EquivArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Seed override.
    #[arg(long)]
    pub seed: Option<u64>,
}

fn parse_triplet(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected KP,KI,KD, got `{s}`"));
    }
    let mut out = [0.0; 3];
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = p.trim().parse().map_err(|_| format!("`{p}` is not a number"))?;
    }
    Ok(out)
}

fn parse_gains(s: &str) -> Result<PidGains, String> {
    let [kp, ki, kd] = parse_triplet(s)?;
    let gains = PidGains::new(kp, ki, kd);
    gains.validate().map_err(|e| e.to_string())?;
    Ok(gains)
}

fn parse_cell(s: &str) -> Result<GridState, String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected X,Y, got `{s}`"))?;
    let x = x.trim().parse().map_err(|_| format!("bad column `{x}`"))?;
    let y = y.trim().parse().map_err(|_| format!("bad row `{y}`"))?;
    Ok(GridState::new(x, y))
}

fn parse_seed_range(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected A..B, got `{s}`"))?;
    let a: u64 = a.parse().map_err(|_| format!("bad seed `{a}`"))?;
    let b: u64 = b.parse().map_err(|_| format!("bad seed `{b}`"))?;
    if b <= a {
        return Err(format!("empty seed range {a}..{b}"));
    }
    Ok((a, b))
}

fn load_config(path: &Path) -> CliResult<TrainConfig> {
    Ok(TrainConfig::load(path)?)
}

/// Echoes the resolved configuration on standard error.
fn announce(cfg: &TrainConfig) {
    eprintln!("config: {}", serde_json::to_string(cfg).expect("config serializes"));
    eprintln!("seed: {}", cfg.seed);
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Train(args) => train::run(args),
        Command::Eval(args) => tools::eval(args),
        Command::Fly(args) => tools::fly(args),
        Command::Oracle(args) => tools::oracle(args),
        Command::Plot(args) => tools::plot(args),
        Command::Equiv(args) => tools::equiv(args),
    }
}
