mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::CliError;

#[derive(Parser, Debug)]
#[command(name = "semicl", version, about = "Semiclassical moment dynamics from the command line")]
struct Cli {
    /// Parameter file (JSON, or TOML for `.toml` files).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV/JSON files and the manifest.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Overrides the primary tolerance of the subcommand.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bracket of two single-DOF moments, e.g. `q2 pi2`.
    Bracket(BracketArgs),
    /// Moments of a realization at a chart point.
    Realize(RealizeArgs),
    /// Tunneling run or parameter sweep.
    Tunnel(TunnelArgs),
    /// Thermal averages and two-point function.
    Thermo(ThermoArgs),
    /// Two-DOF low-energy effective potential.
    Effpot(EffpotArgs),
    /// All-orders ground-state estimate against the exact value.
    Ground(GroundArgs),
    /// Density and phase from position-representation moments.
    Reconstruct(ReconstructArgs),
}

#[derive(Args, Debug)]
pub struct BracketArgs {
    pub lhs: String,
    pub rhs: String,
    /// Truncation order.
    #[arg(long)]
    pub order: Option<u32>,
    /// Use the Moyal-bracket oracle instead of the closed form.
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Args, Debug)]
pub struct RealizeArgs {
    #[arg(long)]
    pub realization: Option<String>,
    /// Chart values as `name=value` pairs separated by commas.
    #[arg(long)]
    pub point: Option<String>,
    /// Also run a bracket-closure certificate at this many random points.
    #[arg(long)]
    pub certify: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TunnelArgs {
    #[arg(long = "v-top")]
    pub v_top: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long = "U")]
    pub u: Option<f64>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long = "t-max")]
    pub t_max: Option<f64>,
    /// Sweep parameter: gamma, v_top or start_q.
    #[arg(long)]
    pub sweep: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct ThermoArgs {
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub hbar: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub omegas: Option<Vec<f64>>,
    /// Distances `|x − y|` for the field two-point function.
    #[arg(long = "two-point", value_delimiter = ',')]
    pub two_point: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct EffpotArgs {
    /// Use `½ω²(q₁² + q₂²) + γω²q₁q₂`.
    #[arg(long = "coupled-oscillator")]
    pub coupled_oscillator: bool,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub hbar: Option<f64>,
    #[arg(long)]
    pub q1: Option<f64>,
    #[arg(long)]
    pub q2: Option<f64>,
}

#[derive(Args, Debug)]
pub struct GroundArgs {
    /// abs, relativistic_sqrt, harmonic or quartic_barrier.
    #[arg(long)]
    pub potential: Option<String>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long = "U")]
    pub u: Option<f64>,
    #[arg(long)]
    pub mass: Option<f64>,
    #[arg(long)]
    pub hbar: Option<f64>,
    /// Oscillator basis size of the exact diagonalization.
    #[arg(long)]
    pub basis: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long = "q-min")]
    pub q_min: Option<f64>,
    #[arg(long = "q-max")]
    pub q_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Realization to scan for impurity parameters.
    #[arg(long)]
    pub impurity: Option<String>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = config::load_config(cli.config.as_deref())?;
    let ctx = commands::Context {
        file,
        out: cli.out,
        seed: cli.seed,
        tol: cli.tol,
    };
    match cli.command {
        Command::Bracket(a) => commands::bracket(ctx, a),
        Command::Realize(a) => commands::realize(ctx, a),
        Command::Tunnel(a) => commands::tunnel(ctx, a),
        Command::Thermo(a) => commands::thermo(ctx, a),
        Command::Effpot(a) => commands::effpot(ctx, a),
        Command::Ground(a) => commands::ground(ctx, a),
        Command::Reconstruct(a) => commands::reconstruct(ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("semicl: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
