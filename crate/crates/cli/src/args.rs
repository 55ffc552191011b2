use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "disagree-kit", version, about = "Gold derivation, run aggregation and scoring for learning-with-disagreement tasks")]
pub struct Cli {
    /// Worker threads for per-item work. Output does not depend on it.
    #[arg(long, global = true, env = "DISAGREE_KIT_THREADS")]
    pub threads: Option<usize>,

    /// Print errors on stderr as JSON objects.
    #[arg(long, global = true)]
    pub json_errors: bool,

    /// Key-value file (`key = value` per line) supplying defaults for flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Task1,
    Task2,
    Task3,
}

impl From<TaskArg> for disagree_core::TaskId {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Task1 => disagree_core::TaskId::Task1,
            TaskArg::Task2 => disagree_core::TaskId::Task2,
            TaskArg::Task3 => disagree_core::TaskId::Task3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Soft,
    Hard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    #[value(name = "soft-soft")]
    SoftSoft,
    #[value(name = "hard-hard")]
    HardHard,
    #[value(name = "hard-soft")]
    HardSoft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineArg {
    Gold,
    Majority,
    Minority,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Tsv,
    Markdown,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    /// Best single run on development gold.
    Aiupv1,
    /// Mean ensemble of the runs.
    Aiupv2,
    /// Mean ensemble snapped to annotator-feasible distributions.
    Aiupv3,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a dataset or run file against its schema.
    Validate(ValidateArgs),
    /// Derive gold labels from an annotated dataset.
    Gold(GoldArgs),
    /// Write a gold, majority-class or minority-class baseline run.
    Baseline(BaselineArgs),
    /// Generate a synthetic annotated dataset.
    Synth(SynthArgs),
    /// Write a soft run that mixes gold with seeded noise.
    Perturb(PerturbArgs),
    /// Snap a soft run to distributions reachable with N annotators.
    Adjust(AdjustArgs),
    /// Average several soft runs.
    Ensemble(EnsembleArgs),
    /// Pick the best candidate run on development gold.
    Select(SelectArgs),
    /// Turn a soft run into hard labels.
    Harden(HardenArgs),
    /// Score runs against gold.
    Evaluate(EvaluateArgs),
    /// Render saved JSON reports as a table.
    Report(ReportArgs),
    /// Run one of the three submission pipelines end to end.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, conflicts_with = "run", required_unless_present = "run")]
    pub dataset: Option<PathBuf>,
    #[arg(long, requires = "task")]
    pub run: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub task: Option<TaskArg>,
}

#[derive(Debug, Args)]
pub struct GoldArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum)]
    pub task: TaskArg,
    #[arg(long, value_enum, default_value = "soft")]
    pub kind: KindArg,
    /// Task 3 hard-label threshold.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Where to list excluded items (default: `<out>.warnings.json`).
    #[arg(long)]
    pub warnings: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    /// Annotated dataset or gold run file.
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, value_enum)]
    pub task: TaskArg,
    #[arg(long, value_enum)]
    pub which: BaselineArg,
    #[arg(long, value_enum, default_value = "soft")]
    pub kind: KindArg,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    pub items: usize,
    #[arg(long, default_value_t = 6)]
    pub annotators: u32,
    #[arg(long, default_value_t = 0.7)]
    pub agreement: f64,
    #[arg(long, default_value_t = 0.5)]
    pub lang_mix: f64,
    #[arg(long, default_value_t = 0.0)]
    pub unknown_rate: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, value_enum)]
    pub task: TaskArg,
    #[arg(long, default_value_t = 0.3)]
    pub noise: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value = "perturbed")]
    pub name: String,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AdjustArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long, value_enum)]
    pub task: TaskArg,
    /// Dataset supplying per-item annotator counts.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Annotator count for items without one (default 6 when no dataset is given).
    #[arg(long)]
    pub annotators: Option<u32>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    #[arg(required = true, num_args = 2..)]
    pub runs: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub task: TaskArg,
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(required = true)]
    pub candidates: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub task: TaskArg,
    /// Development gold: annotated dataset or gold run file.
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, default_value = "icm-soft")]
    pub metric: String,
    #[arg(long, value_enum, default_value = "soft-soft")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Copy the winning run here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct HardenArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long, value_enum)]
    pub task: TaskArg,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_enum)]
    pub task: TaskArg,
    #[arg(long, value_enum, default_value = "soft-soft")]
    pub mode: ModeArg,
    /// Annotated dataset or gold run file.
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long = "pred", required = true)]
    pub preds: Vec<PathBuf>,
    /// Restrict output to these metrics (comma-separated ids).
    #[arg(long, value_delimiter = ',')]
    pub metrics: Option<Vec<String>>,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: FormatArg,
    /// Add gold, majority and minority baseline rows.
    #[arg(long)]
    pub with_baselines: bool,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Recorded in report metadata.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Recorded in report metadata.
    #[arg(long)]
    pub annotators: Option<u32>,
    /// Recorded in report metadata.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// JSON report files written by `evaluate --format json`.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long, value_enum)]
    pub variant: VariantArg,
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub task: TaskArg,
    /// Test gold: annotated dataset or gold run file.
    #[arg(long)]
    pub gold: PathBuf,
    /// Development gold for run selection (defaults to --gold).
    #[arg(long)]
    pub dev_gold: Option<PathBuf>,
    /// Dataset supplying per-item annotator counts for adjustment.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub annotators: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long, default_value = "icm-soft")]
    pub metric: String,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: FormatArg,
    #[arg(long)]
    pub with_baselines: bool,
    /// Recorded in report metadata.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the final soft run here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the hardened final run here.
    #[arg(long)]
    pub hard_out: Option<PathBuf>,
}
