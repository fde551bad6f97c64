//! Command-line grammar.

use std::path::PathBuf;

use arrivals::lattice_walk::StepLaw;
use arrivals::ness::NessKind;
use arrivals::WaitingLaw;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "arrivals",
    version,
    about = "Renewal processes stopped at an independent random time, and the lattice walks they drive",
    arg_required_else_help = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// State probabilities, count moments and limit law of a renewal process
    Renewal(RenewalArgs),
    /// The renewal process frozen at an independent stopping time
    Stopped(StoppedArgs),
    /// Moments and propagators of a lattice walk driven by a stopped process
    Walk(WalkArgs),
    /// Steady states: lattice (exact) or continuous (rescaled limit) curves
    Ness(NessArgs),
    /// Monte Carlo histograms and walk endpoints
    Mc(McArgs),
    /// Data series behind the figures
    Figures(FiguresArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Last time step computed
    #[arg(long, default_value_t = 512)]
    pub horizon: usize,
    /// Simulation seed
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Simulation replicas
    #[arg(long, default_value_t = 100_000)]
    pub replicas: usize,
    /// Directory receiving the output files; standard output when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Format of tables
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Simulation threads; all cores when absent
    #[arg(long)]
    pub workers: Option<usize>,
    /// Plain-text `key = value` file supplying any of the long options
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenewalArgs {
    /// Waiting-time law, e.g. `dbp:mass=0.6,p=0.3`
    #[arg(long)]
    pub law: WaitingLaw,
    /// Emit count moments instead of the state table
    #[arg(long)]
    pub moments: bool,
    /// Emit a JSON summary instead of a table
    #[arg(long)]
    pub summary: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct StoppedArgs {
    /// Proper waiting-time law of the stopped process
    #[arg(long)]
    pub inner: WaitingLaw,
    /// Waiting-time law of the stopping time, possibly defective
    #[arg(long)]
    pub stop: WaitingLaw,
    /// Emit moments instead of the state table
    #[arg(long)]
    pub moments: bool,
    /// Emit a JSON summary instead of a table
    #[arg(long)]
    pub summary: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct WalkArgs {
    #[arg(long)]
    pub inner: WaitingLaw,
    #[arg(long)]
    pub stop: WaitingLaw,
    /// Step law: pm1, unit, nn:d=<dim>, triangular-biased, triangular-unbiased
    #[arg(long)]
    pub step: StepLaw,
    /// Emit the propagator at `--time` instead of the moments
    #[arg(long)]
    pub propagator: bool,
    /// Time of the propagator; the horizon when absent
    #[arg(long)]
    pub time: Option<usize>,
    /// Half-width of the propagator box; large enough to hold every path when absent
    #[arg(long)]
    pub half_width: Option<usize>,
    #[arg(long)]
    pub summary: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct NessArgs {
    /// Continuous curve: one-sided-exp:a=<A>, laplace:b=<B>, stable-mixture:alpha=..,theta=..,scale=..
    #[arg(long, conflicts_with_all = ["inner", "q", "step"])]
    pub kind: Option<NessKind>,
    #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
    pub ymin: f64,
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    pub ymax: f64,
    #[arg(long, default_value_t = 401)]
    pub points: usize,
    /// Lattice steady state: inner law of the walk's clock
    #[arg(long, requires_all = ["q", "step"])]
    pub inner: Option<WaitingLaw>,
    /// Per-step survival probability of the geometric stop
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub step: Option<StepLaw>,
    /// Half-width of the lattice box
    #[arg(long, default_value_t = 100)]
    pub half_width: usize,
    #[arg(long)]
    pub summary: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(long)]
    pub inner: WaitingLaw,
    #[arg(long)]
    pub stop: WaitingLaw,
    /// Comma-separated observation times of the histograms; the horizon when absent
    #[arg(long, value_delimiter = ',')]
    pub times: Vec<u64>,
    /// Sample walk endpoints with this step law instead of count histograms
    #[arg(long)]
    pub step: Option<StepLaw>,
    /// Endpoint observation: a time, or `frozen:<cap>` for the position after the stop
    #[arg(long)]
    pub observe: Option<String>,
    /// Emit a JSON summary comparing the sample with the exact law
    #[arg(long)]
    pub summary: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct FiguresArgs {
    /// fig2, fig3, fig5, fig6, fig7, fig8, fig9, fig10 or all
    #[arg(value_delimiter = ',', default_value = "all")]
    pub names: Vec<String>,
    #[command(flatten)]
    pub common: Common,
}
