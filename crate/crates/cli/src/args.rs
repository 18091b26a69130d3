use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use plaquette::protocols::HamiltonianMode;

use crate::settings::{Format, InitialState};

#[derive(Debug, Parser)]
#[command(
    name = "plaquette",
    version,
    about = "Bosonic four-site plaquette: dynamics, spectra and NOON protocols"
)]
pub struct Cli {
    /// JSON file with default parameters; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory for output files [env: PLAQUETTE_OUT_DIR, default: .]
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    /// Data file format for `evolve` and `bands`.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Seed for sampled measurement outcomes.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Site 1-3 imbalance against dimensionless time Jt.
    Evolve(EvolveArgs),
    /// Spectrum against U/J, grouped into (M, P) bands.
    Bands(BandsArgs),
    /// NOON identification, production and phase estimation at t_m.
    #[command(subcommand)]
    Protocol(ProtocolCommand),
    /// Invariant checks with measured residuals; non-zero exit on failure.
    Verify(VerifyArgs),
}

fn parse_mode(s: &str) -> Result<HamiltonianMode, String> {
    s.parse().map_err(|e: plaquette::Error| e.to_string())
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// Particles initially on sites 1 and 3 [default: 15].
    #[arg(long = "M", alias = "m")]
    pub m: Option<usize>,
    /// Particles initially on sites 2 and 4 [default: 10].
    #[arg(long = "P", alias = "p")]
    pub p: Option<usize>,
    /// Interaction ratio; U12 = 4 U/J with J = 1 and U0 = 0 [default: 8].
    #[arg(long)]
    pub u_over_j: Option<f64>,
    /// full, effective or second-order [default: full].
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<HamiltonianMode>,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Initial state [default: fock].
    #[arg(long, value_enum)]
    pub state: Option<InitialState>,
    /// NOON phase, e.g. `0` or `pi` [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<String>,
    /// Phase imprinted on site 4 before evolving [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    pub varphi: Option<String>,
    /// Jt values: `start:stop:count` or a list; `tm` is the measurement time
    /// [default: 0:2.2tm:200].
    #[arg(long)]
    pub times: Option<String>,
    /// Output file, relative to the output directory; `-` for stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BandsArgs {
    /// Total particle number [default: M + P].
    #[arg(long = "N", alias = "n")]
    pub n: Option<usize>,
    /// Band to flag in the cluster summary, when M + P = N [default: 15, 10].
    #[arg(long = "M", alias = "m")]
    pub m: Option<usize>,
    #[arg(long = "P", alias = "p")]
    pub p: Option<usize>,
    /// Single interaction ratio [default: 8].
    #[arg(long, conflicts_with = "grid")]
    pub u_over_j: Option<f64>,
    /// Log-spaced `lo:hi:count` or a list of U/J values.
    #[arg(long)]
    pub grid: Option<String>,
    /// On-site interaction U0/J [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    pub u0_over_j: Option<f64>,
    /// Diagonalize with the hopping switched off.
    #[arg(long)]
    pub j_zero: bool,
    /// Report E rather than E - C.
    #[arg(long)]
    pub raw_energies: bool,
    /// Split the spectrum at gaps wider than this many J [default: 10].
    #[arg(long)]
    pub gap_factor: Option<f64>,
    /// Eigenvalue file, relative to the output directory; `-` for stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ProtocolCommand {
    /// Distinguish phi = 0 from phi = pi with one site-3 measurement.
    Identify(IdentifyArgs),
    /// Evolve |M,P,0,0> and tabulate site-3 outcomes with NOON fidelities.
    Produce(ProduceArgs),
    /// Phase uncertainty against the imprinted phase varphi.
    Estimate(EstimateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ProtocolArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Evaluation time in Jt [default: tm].
    #[arg(long)]
    pub time: Option<String>,
    /// Site-3 outcomes to sample from the exact distribution [default: 0].
    #[arg(long)]
    pub shots: Option<usize>,
}

#[derive(Debug, Args)]
pub struct IdentifyArgs {
    #[command(flatten)]
    pub common: ProtocolArgs,
    /// `0` or `pi` [default: 0].
    #[arg(long)]
    pub phi: Option<String>,
}

#[derive(Debug, Args)]
pub struct ProduceArgs {
    #[command(flatten)]
    pub common: ProtocolArgs,
    /// Run at even N; the report is flagged as outside the protocol's validity.
    #[arg(long)]
    pub allow_even_n: bool,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub common: ProtocolArgs,
    /// Linear `start:stop:count` or a list [default: 0:pi/P:50].
    #[arg(long)]
    pub varphi_grid: Option<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Add the N = 25 full-Hamiltonian reference run (minutes).
    #[arg(long)]
    pub acceptance: bool,
    /// Shift U13 away from U0 by this amount in the commutator check.
    #[arg(long, value_name = "DELTA", allow_hyphen_values = true)]
    pub break_integrability: Option<f64>,
    /// Report file, relative to the output directory; `-` for stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}
