//! `noiseband` command-line driver.
//!
//! Exit codes: 0 success, 2 input error, 3 numerical failure, 4 empty group
//! or threshold failure.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "noiseband", version, about = "Random-matrix analysis of correlation noise")]
pub struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Directory for the emitted files; nothing is written when absent.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    /// Rendering of the main result on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct PanelInput {
    /// Wide CSV panel: header `time,A1,A2,...`.
    #[arg(long)]
    pub input: PathBuf,

    /// Values are prices; log returns are taken before the analysis.
    #[arg(long)]
    pub prices: bool,
}

#[derive(Args, Debug)]
pub struct GroupArgs {
    /// Factors 2..=K define the strongly correlated group.
    #[arg(long, default_value_t = 3)]
    pub k_factors: usize,

    /// Outlier threshold in units of the eigenvector's standard deviation.
    #[arg(long, default_value_t = noiseband::structure::DEFAULT_THRESHOLD_MULT)]
    pub threshold: f64,

    /// Signal eigenvalues excluded from the MP fit; detected when absent.
    #[arg(long)]
    pub n_signal: Option<usize>,

    /// Keep the strongly correlated group whole instead of splitting it.
    #[arg(long)]
    pub no_split: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SamplerMode {
    Gaussian,
    Stochvol,
}

impl SamplerMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Stochvol => "stochvol",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FlatValue {
    Trace,
    Sigma2,
}

impl FlatValue {
    pub fn name(self) -> &'static str {
        match self {
            Self::Trace => "trace",
            Self::Sigma2 => "sigma2",
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Full analysis: spectrum, MP fit, participation, groups, block model.
    Analyze {
        #[command(flatten)]
        panel: PanelInput,
        #[command(flatten)]
        groups: GroupArgs,
        /// Histogram bins of the eigenvalue density.
        #[arg(long, default_value_t = 60)]
        bins: usize,
    },
    /// Fit the MP law to a panel's spectrum or to an eigenvalue file.
    FitMp {
        #[arg(long, required_unless_present = "eigenvalues", conflicts_with = "eigenvalues")]
        input: Option<PathBuf>,
        #[arg(long)]
        prices: bool,
        /// Eigenvalue CSV (`k,lambda_k`) instead of a panel.
        #[arg(long)]
        eigenvalues: Option<PathBuf>,
        #[arg(long)]
        n_signal: Option<usize>,
    },
    /// Participation ratios, and relative IPRs when a partition is given.
    Ipr {
        #[command(flatten)]
        panel: PanelInput,
        /// Partition CSV (`asset_id,group_name`).
        #[arg(long)]
        partition: Option<PathBuf>,
    },
    /// Outlier-group extraction with the clustering split.
    Groups {
        #[command(flatten)]
        panel: PanelInput,
        #[command(flatten)]
        groups: GroupArgs,
    },
    /// Block effective model estimated from a panel, or the reference model.
    Model {
        #[arg(long, required_unless_present = "reference", conflicts_with = "reference")]
        input: Option<PathBuf>,
        #[arg(long)]
        prices: bool,
        /// Partition CSV; extracted from the spectrum when absent.
        #[arg(long)]
        partition: Option<PathBuf>,
        /// Emit the built-in four-group reference model.
        #[arg(long)]
        reference: bool,
        #[command(flatten)]
        groups: GroupArgs,
    },
    /// Flat-band cleaning of a panel's correlation matrix.
    Clean {
        #[command(flatten)]
        panel: PanelInput,
        /// Eigenpairs kept; defaults to the fitted signal count.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum, default_value_t = FlatValue::Trace)]
        flat_value: FlatValue,
        /// Rescale the cleaned matrix to unit diagonal.
        #[arg(long)]
        renormalize: bool,
    },
    /// Sample a return panel from a block model.
    Simulate {
        /// Block model JSON.
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = SamplerMode::Gaussian)]
        mode: SamplerMode,
        /// Tail index of the volatility mixing (stochvol only).
        #[arg(long, default_value_t = 3.0)]
        nu: f64,
        /// Number of time steps.
        #[arg(long)]
        t: usize,
        /// Output panel CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo risk-bias backtest of the noise subbands.
    Backtest {
        /// Block model JSON.
        #[arg(long)]
        model: PathBuf,
        /// In-sample window; defaults to 3N.
        #[arg(long)]
        t_in: Option<usize>,
        /// Out-of-sample window; defaults to 3N.
        #[arg(long)]
        t_out: Option<usize>,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        /// Eigenpairs kept by the cleaning; defaults to the number of groups.
        #[arg(long)]
        k_signal: Option<usize>,
        #[arg(long, value_enum, default_value_t = FlatValue::Trace)]
        flat_value: FlatValue,
        #[arg(long, value_enum, default_value_t = SamplerMode::Gaussian)]
        sampler: SamplerMode,
        #[arg(long, default_value_t = 3.0)]
        nu: f64,
        #[arg(long)]
        renormalize: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli).and_then(|out| out.emit(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
