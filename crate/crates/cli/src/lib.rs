//! Command-line front end. The binary parses [`Cli`] and hands it to [`run`].

mod commands;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "bfnflow", version, about = "Bayesian flows over residue frames")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// RNG seed; defaults to the config value.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Flat TOML file with hyperparameters.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenoiserKind {
    Oracle,
    Noisy,
    Knn,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum WrapArg {
    Raw,
    Canonical,
    Nearest,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate the angle mixture flow and write its parameters per step as CSV.
    FlowSimAngles {
        /// Target angle in degrees.
        #[arg(long, allow_hyphen_values = true)]
        chi: f64,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long)]
        rho0: Option<f64>,
        #[arg(long)]
        rho1: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, value_enum)]
        wrap: Option<WrapArg>,
    },
    /// Orientation flow draws and their geodesic distance to a random target, as CSV.
    FlowSimRot {
        #[arg(long)]
        steps: Option<usize>,
        /// Draws per step.
        #[arg(long, default_value_t = 1)]
        samples: usize,
    },
    /// Generate peptides and dump the trajectory.
    Sample(SampleArgs),
    /// Per-modality statistics of the discrete-time loss.
    LossEval {
        #[arg(long)]
        target: PathBuf,
        #[arg(long, value_enum)]
        denoiser: DenoiserKind,
        /// Training set for the nearest-neighbour predictor.
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Convert a PDB file into residue frames.
    Ingest {
        #[arg(long)]
        pdb: PathBuf,
        /// Keep only this chain.
        #[arg(long)]
        chain: Option<String>,
    },
    /// Compare predicted frames with the truth and write metrics as CSV.
    Eval {
        /// Predicted frames; repeat for several samples.
        #[arg(long, required = true)]
        pred: Vec<PathBuf>,
        #[arg(long = "true")]
        truth: PathBuf,
    },
    /// Monte Carlo check of the Matrix Fisher first-moment approximation.
    MfCheck {
        #[arg(long, value_delimiter = ',', default_value = "1,5,10,26,50")]
        lambda_grid: Vec<f64>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    /// Pocket frames, or `none`.
    #[arg(long, default_value = "none")]
    pub context: String,
    /// Residue count; taken from the target when omitted.
    #[arg(long)]
    pub len: Option<usize>,
    #[arg(long, value_enum)]
    pub denoiser: DenoiserKind,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Target frames for the oracle predictors.
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Training set for the nearest-neighbour predictor.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Independent chains.
    #[arg(long, default_value_t = 1)]
    pub samples: usize,
    /// Trajectory JSON-lines file; defaults to `<out>.traj.jsonl` when
    /// `--out` is given. CSV summaries are written next to it.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let env = commands::Env::new(cli.common)?;
    match cli.command {
        Command::FlowSimAngles {
            chi,
            k,
            rho0,
            rho1,
            steps,
            wrap,
        } => commands::flow_sim_angles(&env, chi, k, rho0, rho1, steps, wrap),
        Command::FlowSimRot { steps, samples } => commands::flow_sim_rot(&env, steps, samples),
        Command::Sample(args) => commands::sample(&env, &args),
        Command::LossEval {
            target,
            denoiser,
            dataset,
            trials,
        } => commands::loss_eval(&env, &target, denoiser, dataset.as_deref(), trials),
        Command::Ingest { pdb, chain } => commands::ingest(&env, &pdb, chain.as_deref()),
        Command::Eval { pred, truth } => commands::eval(&env, &pred, &truth),
        Command::MfCheck { lambda_grid, samples } => commands::mf_check(&env, &lambda_grid, samples),
    }
}
