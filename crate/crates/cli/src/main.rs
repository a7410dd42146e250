//! `repodomain`: fetch repositories, build a labelled corpus, train and
//! evaluate the domain classifier, and compare practices across domains.

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "repodomain", version, about = "Repository application-domain classification")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory holding cached API responses.
    #[arg(long, global = true, default_value = ".repodomain-cache")]
    pub cache: PathBuf,
    /// Shape of what goes to standard output.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Worker threads for batch work.
    #[arg(long, global = true, default_value_t = 4)]
    pub jobs: usize,
    /// Never touch the network; repositories missing from the cache are errors.
    #[arg(long, global = true)]
    pub offline: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Download repository metadata (and optionally commits) into the cache.
    Fetch(FetchArgs),
    /// Turn cached repositories into a dataset file.
    Build(BuildArgs),
    /// Fit the feature pipeline and boosted trees; write a model bundle.
    Train(TrainArgs),
    /// Score a model, a predictions file, or a cross-validation run.
    Eval(EvalArgs),
    /// Predict the domain of individual repositories.
    Classify(ClassifyArgs),
    /// Cross-validate each feature-source configuration.
    Ablate(AblateArgs),
    /// Mine practice profiles for a list of repositories.
    Practices(PracticesArgs),
    /// Cross-domain comparison tables and significance tests.
    Report(ReportArgs),
    /// Two-dimensional projection of practice profiles.
    Tsne(TsneArgs),
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    /// File with one `owner/name` per line; `#` starts a comment.
    #[arg(long)]
    pub repos: PathBuf,
    /// Also fetch full commit histories.
    #[arg(long)]
    pub commits: bool,
    /// Refetch resources already in the cache.
    #[arg(long)]
    pub refresh: bool,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Cache directory to read; defaults to `--cache`.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// `ref,label` CSV; without it every cached repository is included unlabelled.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Fold Application and System Software into one class.
    #[arg(long)]
    pub merge: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Wall-clock budget for hyperparameter search, e.g. `1000s` or `15m`; `0` skips the search.
    #[arg(long, default_value = "1000s", value_parser = humantime::parse_duration)]
    pub budget: std::time::Duration,
    /// Upper bound on search trials.
    #[arg(long, default_value_t = 50)]
    pub max_trials: usize,
    /// Folds used to score each search trial.
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value = "macro_f1")]
    pub objective: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Precomputed text embeddings (JSON lines of `ref` and `vector`) instead of TF-IDF.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Model bundle to score against `--data`.
    #[arg(long, requires = "data", conflicts_with_all = ["predictions", "folds"])]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// CSV with `truth` and `predicted` columns, scored as is.
    #[arg(long, conflicts_with = "data")]
    pub predictions: Option<PathBuf>,
    /// Cross-validate default settings on `--data` with this many folds.
    #[arg(long, requires = "data")]
    pub folds: Option<usize>,
    /// Directory for confusion.csv and metrics.csv.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Repository as `owner/name`; repeatable.
    #[arg(long = "repo", required_unless_present = "repos")]
    pub repo: Vec<String>,
    /// File of repositories, one per line.
    #[arg(long)]
    pub repos: Option<PathBuf>,
    /// Also write predictions as CSV here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Per-configuration search budget; `0` trains every row with defaults.
    #[arg(long, default_value = "0", value_parser = humantime::parse_duration)]
    pub budget: std::time::Duration,
    #[arg(long, default_value_t = 20)]
    pub max_trials: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PracticesArgs {
    /// Classify each repository with this bundle.
    #[arg(long, required_unless_present = "labels", conflicts_with = "labels")]
    pub model: Option<PathBuf>,
    /// Take domains from a `ref,label` CSV instead of a model.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Repositories to profile; defaults to every row of `--labels`.
    #[arg(long, required_unless_present = "labels")]
    pub repos: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Repositories with more commits than this are excluded as outliers.
    #[arg(long, default_value_t = repodomain_core::practices::MAX_COMMITS)]
    pub max_commits: u64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub profiles: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TsneArgs {
    #[arg(long)]
    pub profiles: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 30.0)]
    pub perplexity: f64,
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = &cli.global;
    if g.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(g.jobs).build_global() {
        log::warn!("thread pool already configured: {e}");
    }
    match &cli.command {
        Command::Fetch(a) => commands::fetch(g, a),
        Command::Build(a) => commands::build(g, a),
        Command::Train(a) => commands::train_command(g, a),
        Command::Eval(a) => commands::eval(g, a),
        Command::Classify(a) => commands::classify(g, a),
        Command::Ablate(a) => commands::ablate(g, a),
        Command::Practices(a) => commands::practices(g, a),
        Command::Report(a) => commands::report(g, a),
        Command::Tsne(a) => commands::tsne(g, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version land here too, with exit status 0
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
