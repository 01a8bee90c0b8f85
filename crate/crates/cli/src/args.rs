use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sdds_core::{MacroState, ModelKind};

/// Probability of consistency of soft-state sensor data distribution.
#[derive(Debug, Parser)]
#[command(name = "sdds", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Steady-state macro-state probabilities of one model.
    Steady {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Erlang phase count.
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Steady state over a list of phase counts, plus the exact reference row.
    Sweep {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Comma-separated, strictly increasing phase counts.
        #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,20,50,100")]
        k: Vec<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// State probabilities over time from a given initial state.
    Transient {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Initial state.
        #[arg(long, value_enum, default_value_t = StartState::State3Entry)]
        start: StartState,
        /// Last time point, seconds.
        #[arg(long)]
        until: f64,
        /// Spacing of time points, seconds.
        #[arg(long)]
        step: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Discrete-event simulation with batch-means confidence intervals.
    Simulate {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, value_enum, default_value_t = SimLevel::State)]
        mode: SimLevel,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Cross-model consistency checks; exits with status 3 if any fails.
    Validate {
        #[command(flatten)]
        params: ParamArgs,
        /// Also check the state-level simulator against the reference.
        #[arg(long)]
        simulate: bool,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    /// Preset configuration (1: short transfer delay, 2: long transfer delay).
    #[arg(long = "case", value_parser = clap::value_parser!(u8).range(1..=2))]
    pub case: Option<u8>,
    /// TOML file of parameters (SddsParams field names); overrides the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Confirmed-message transmission.
    #[arg(long)]
    pub reliable: bool,
    #[arg(long)]
    pub lambda_u: Option<f64>,
    #[arg(long)]
    pub lambda_d: Option<f64>,
    #[arg(long)]
    pub lambda_f: Option<f64>,
    #[arg(long)]
    pub p_loss: Option<f64>,
    #[arg(long)]
    pub n_receivers: Option<u32>,
    #[arg(long)]
    pub transfer_delay: Option<f64>,
    #[arg(long)]
    pub refresh_period: Option<f64>,
    #[arg(long)]
    pub receiver_timeout: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = Model::ErlangFull)]
    pub model: Model,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// Simulated time, seconds.
    #[arg(long, default_value_t = 1e6)]
    pub horizon: f64,
    /// Discarded initial period, seconds [default: 5 / min(lambda_d, 1/T)].
    #[arg(long)]
    pub warmup: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub batches: usize,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file; stdout when neither this nor an output directory is set.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory receiving `<subcommand>.<ext>` when --out is not given.
    #[arg(long, env = "SDDS_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Markov,
    ErlangFull,
    ErlangSimplified,
}

impl From<Model> for ModelKind {
    fn from(m: Model) -> Self {
        match m {
            Model::Markov => ModelKind::Markov,
            Model::ErlangFull => ModelKind::ErlangFull,
            Model::ErlangSimplified => ModelKind::ErlangSimplified,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StartState {
    State1,
    State2,
    State3Entry,
    State4Entry,
}

impl From<StartState> for MacroState {
    fn from(s: StartState) -> Self {
        match s {
            StartState::State1 => MacroState::S1,
            StartState::State2 => MacroState::S2,
            StartState::State3Entry => MacroState::S3,
            StartState::State4Entry => MacroState::S4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimLevel {
    State,
    Packet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    /// TOML tables.
    Text,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Text => "toml",
        }
    }
}
