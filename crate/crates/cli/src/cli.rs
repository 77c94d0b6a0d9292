use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "tomoforge",
    version,
    about = "Desk-scale mixed-state tomography experiments",
    args_override_self = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Repeated tomography trials; one CSV row per trial.
    Tomography(TomographyArgs),
    /// Exact second moments of Mix(GPS) and Mix⁺(GPS) as JSON.
    Moments(MomentsArgs),
    /// Exact and Monte-Carlo checks of the purification channel.
    PurifyCheck(PurifyCheckArgs),
    /// Normalizer, adjoint-lemma and PGM-equivalence checks.
    PgmCheck(PgmCheckArgs),
    /// Plug-in observable estimation with median of means.
    Shadows(ShadowsArgs),
    /// Structural residuals of the Schur transform.
    SchurValidate(SchurValidateArgs),
    /// Averaging Mix⁺(GPS) over batches of k copies.
    KEntangled(KEntangledArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON object whose keys are long flag names; flags on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StateArgs {
    /// random-rank-K, maximally-mixed, file (with --state-file) or file:PATH.
    #[arg(long)]
    pub state: Option<String>,
    #[arg(long)]
    pub state_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TomographyArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub state: StateArgs,
    #[arg(long)]
    pub algorithm: String,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Purification rank; defaults to 1 for pure-state algorithms and to d otherwise.
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// Target infidelity; the summary reports the fraction of trials meeting it.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Also write the true state as operator JSON.
    #[arg(long)]
    pub dump_state: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub state: StateArgs,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct PurifyCheckArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub state: StateArgs,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct PgmCheckArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 20)]
    pub adjoint_probes: usize,
}

#[derive(Debug, Args)]
pub struct ShadowsArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub state: StateArgs,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long)]
    pub observables: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub n_prime: usize,
    #[arg(long, default_value_t = 9)]
    pub k_mom: usize,
    /// Independent harness runs.
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// Accuracy target; the summary reports coverage at this radius.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SchurValidateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    /// Random states and permutations probed per check.
    #[arg(long, default_value_t = 5)]
    pub probes: usize,
}

#[derive(Debug, Args)]
pub struct KEntangledArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub state: StateArgs,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long)]
    pub n_total: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
}
