use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Dimension analysis and cardinality selection for latent class and
/// hierarchical latent class models.
///
/// Output is JSON on stdout unless a command offers --table. Exit codes: 0 on
/// success, 1 on invalid input, 2 when a numerical rank estimate is
/// unreliable or two dimension paths disagree.
#[derive(Debug, Parser)]
#[command(name = "hlcdim", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Effective dimension with the standard, complete and bound dimensions
    Dim(DimArgs),
    /// Standard, complete, pairwise and combined bounds of an LC model
    Bound(ModelArgs),
    /// Structure, dimensions, regularity and local LC models of a model
    Show(ModelArgs),
    /// Maximum-likelihood parameters by EM with random restarts
    Fit(FitArgs),
    /// Fit a model and evaluate BIC, BIC_plus, CS or CS_plus
    Score(ScoreArgs),
    /// Select hidden cardinalities: LC range scan or HLC hill-climb
    Select(SelectArgs),
    /// Run an experiment plan and write records and summaries
    Experiment(ExperimentArgs),
    /// Draw random parameters (or load them) and sample a dataset
    Sample(SampleArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ModelSource {
    /// Spec string, e.g. 3:2,2,2,2 (LC) or 5,3,3:2,2,2,2,2 (five-leaf HLC)
    #[arg(long, value_name = "SPEC")]
    pub model: Option<String>,
    /// Structure file with `var`, `root` and `edge` lines
    #[arg(long, value_name = "FILE")]
    pub structure: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[command(flatten)]
    pub source: ModelSource,
    /// Render a human-readable table instead of JSON
    #[arg(long)]
    pub table: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DimMethod {
    /// Jacobian rank of the model itself
    Numeric,
    /// Sum of local LC corrections on the regularized model
    Decomposed,
    /// Both paths; they must agree
    Both,
}

#[derive(Debug, Args)]
pub struct DimArgs {
    #[command(flatten)]
    pub source: ModelSource,
    /// Random parameter draws for the rank estimate
    #[arg(long, default_value_t = 10)]
    pub draws: usize,
    /// Seed for the random draws
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Dimension path [default: numeric for LC models, decomposed otherwise]
    #[arg(long, value_enum)]
    pub method: Option<DimMethod>,
    /// Render a human-readable table instead of JSON
    #[arg(long)]
    pub table: bool,
}

#[derive(Debug, Args)]
pub struct EmArgs {
    /// Master seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// EM restarts from random parameters
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    /// Maximum EM iterations per restart
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    /// Relative log-likelihood improvement at which EM stops
    #[arg(long, default_value_t = 1e-7)]
    pub rel_tol: f64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub source: ModelSource,
    /// CSV with one column per observed variable and an optional `count`
    #[arg(long, value_name = "CSV")]
    pub data: PathBuf,
    #[command(flatten)]
    pub em: EmArgs,
    /// Also write the fitted parameters as JSON to this file
    #[arg(long, value_name = "FILE")]
    pub params_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DimSourceArg {
    Numeric,
    Decomposed,
    Bound,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub source: ModelSource,
    /// CSV with one column per observed variable and an optional `count`
    #[arg(long, value_name = "CSV")]
    pub data: PathBuf,
    /// bic, bic_plus, cs, cs_plus or all
    #[arg(long, default_value = "all")]
    pub score: String,
    /// Source of the effective dimension [default: numeric for LC models,
    /// decomposed otherwise]
    #[arg(long, value_enum)]
    pub dim_source: Option<DimSourceArg>,
    /// Random parameter draws for rank estimates
    #[arg(long, default_value_t = 10)]
    pub draws: usize,
    #[command(flatten)]
    pub em: EmArgs,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub source: ModelSource,
    /// CSV with one column per observed variable and an optional `count`
    #[arg(long, value_name = "CSV")]
    pub data: PathBuf,
    /// Score driving the search: bic, bic_plus, cs or cs_plus
    #[arg(long)]
    pub score: String,
    /// Inclusive LC cardinality range LO:HI [default: the regular band]
    #[arg(long, value_name = "LO:HI")]
    pub range: Option<String>,
    /// Source of the effective dimension [default: numeric for LC models,
    /// decomposed otherwise]
    #[arg(long, value_enum)]
    pub dim_source: Option<DimSourceArg>,
    /// Random parameter draws for rank estimates
    #[arg(long, default_value_t = 10)]
    pub draws: usize,
    #[command(flatten)]
    pub em: EmArgs,
    /// Write the search trace as JSON to this file
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Print the trace as a table instead of JSON
    #[arg(long)]
    pub table: bool,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// JSON experiment plan
    #[arg(long, value_name = "FILE")]
    pub plan: PathBuf,
    /// Directory for records.csv, summary.csv and summary_long.csv
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub source: ModelSource,
    /// Number of samples
    #[arg(long)]
    pub n: usize,
    /// Seed for the parameters and the samples
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Parameters as JSON (as written by `fit --params-out`) instead of
    /// random ones
    #[arg(long, value_name = "FILE")]
    pub params: Option<PathBuf>,
    /// Write the CSV here instead of stdout
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
