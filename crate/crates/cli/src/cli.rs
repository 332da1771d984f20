use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "varcheck",
    version,
    about = "Compiler-grounded evaluation of variability-bug detection in configurable C code"
)]
pub struct Cli {
    /// Also write the report printed on stdout to this file.
    #[arg(long, global = true, value_name = "FILE")]
    pub report: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile every product of every system and record per-product verdicts.
    Oracle(OracleArgs),
    /// Ask a model to find variability bugs in full systems.
    Detect(DetectArgs),
    /// Compile the fixes proposed in detection runs under their own products.
    FixEval(FixEvalArgs),
    /// Precision, recall, accuracy and F1 of one attempt against ground truth.
    Metrics(MetricsArgs),
    /// Repeated-run stability: accuracy@k, pass@k, TAR@k and cons@k.
    Stability(StabilityArgs),
    /// Sample size with finite population correction and a seeded stratified draw.
    Sample(SampleArgs),
    /// Paired comparison of a tool and a model on the same systems.
    Compare(CompareArgs),
    /// Seed variability bugs into a commit diff.
    Mutate(MutateArgs),
    /// Ask a model to find variability bugs in commit diffs.
    DiffDetect(DiffDetectArgs),
    /// List the feature macros tested by conditional directives.
    Extract(ExtractArgs),
    /// List the products of a feature set in canonical order.
    Enumerate(EnumerateArgs),
}

#[derive(Debug, Args)]
pub struct CompilerArgs {
    /// C compiler to run; by default the first of clang, gcc and cc on PATH.
    #[arg(long, value_name = "PATH")]
    pub cc: Option<PathBuf>,
    /// Language standard passed as -std=.
    #[arg(long, default_value = "c99")]
    pub std: String,
    /// Extra compiler flag; repeatable.
    #[arg(long = "cflag", value_name = "FLAG", allow_hyphen_values = true)]
    pub cflags: Vec<String>,
    /// Per-product compile timeout in seconds.
    #[arg(long, default_value_t = 10.0)]
    pub compile_timeout: f64,
    /// Maximum number of feature macros per system.
    #[arg(long, default_value_t = 8)]
    pub feature_cap: usize,
    /// Extra diagnostic classification rule PATTERN=CATEGORY, tried before the built-in rules.
    #[arg(long = "category-rule", value_name = "PATTERN=CATEGORY")]
    pub category_rules: Vec<String>,
    /// Concurrent compiler processes; defaults to the available parallelism.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    /// Locally hosted model: temperature 0.4, no retries.
    Local,
    /// Hosted model: temperature 0.2, three retries with exponential backoff.
    Remote,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Full request URL of the chat endpoint.
    #[arg(long)]
    pub endpoint: String,
    /// Model name sent with each request.
    #[arg(long)]
    pub model: String,
    /// Default settings to start from.
    #[arg(long, value_enum, default_value_t = Profile::Local)]
    pub profile: Profile,
    /// Wire dialect: openai, ollama or gemini.
    #[arg(long)]
    pub provider: Option<String>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_retries: Option<u32>,
    /// Base of the exponential retry backoff in seconds.
    #[arg(long)]
    pub backoff_base: Option<f64>,
    /// Per-request timeout in seconds.
    #[arg(long)]
    pub request_timeout: Option<f64>,
    /// Environment variable holding the API key.
    #[arg(long, value_name = "VAR")]
    pub api_key_env: Option<String>,
    #[arg(long)]
    pub max_tokens: Option<u32>,
    /// Minimum seconds between request starts.
    #[arg(long)]
    pub min_interval: Option<f64>,
    /// Requests in flight at once.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    FullCode,
    Diff,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Dataset CSV with columns id,code,label.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Verdict ledger (JSON lines); systems already present are skipped.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub compiler: CompilerArgs,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Run ledger (JSON lines); (system, attempt) pairs already present are skipped.
    #[arg(long)]
    pub out: PathBuf,
    /// Attempts per system.
    #[arg(long, default_value_t = 1)]
    pub runs: u32,
    /// Prompt template; with `diff` the code column must hold a unified diff.
    #[arg(long, value_enum, default_value_t = KindArg::FullCode)]
    pub kind: KindArg,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatchArg {
    /// Any non-empty result is a positive prediction.
    Emptiness,
    /// A hit also needs the claimed products to equal the failing products.
    Strict,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Run ledger written by `detect` or `diff-detect`.
    #[arg(long)]
    pub runs: PathBuf,
    /// Ground truth: a verdict ledger, or a CSV of system,has_error.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub attempt: u32,
    #[arg(long = "match", value_enum, default_value_t = MatchArg::Emptiness)]
    pub match_mode: MatchArg,
}

#[derive(Debug, Args)]
pub struct FixEvalArgs {
    /// Run ledger written by `detect --kind full-code`.
    #[arg(long)]
    pub runs: PathBuf,
    /// Dataset the runs were made on.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Ground truth, used to count the cases in which a fix was expected.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Fix verdict ledger; pairs already present are skipped.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub compiler: CompilerArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Detection,
    Fixing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FixIdentity {
    /// Two fixes agree when their whitespace-normalized code is equal.
    Text,
    /// Two fixes agree when they have the same compile outcome.
    Outcome,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    /// CSV transcript with columns system,attempt,answer,correct.
    #[arg(long, conflicts_with_all = ["runs", "truth", "fixes"])]
    pub transcript: Option<PathBuf>,
    /// Run ledger with one entry per (system, attempt).
    #[arg(long, required_unless_present = "transcript")]
    pub runs: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TaskArg::Detection)]
    pub task: TaskArg,
    /// Ground truth for the detection task.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Fix verdict ledger for the fixing task.
    #[arg(long)]
    pub fixes: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FixIdentity::Text)]
    pub fix_identity: FixIdentity,
    #[arg(long, default_value_t = 5)]
    pub max_k: usize,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["population", "truth", "strata"])))]
pub struct SampleArgs {
    /// Population size, when only the sample size is needed.
    #[arg(long)]
    pub population: Option<usize>,
    /// Ground truth; systems are stratified into compiles and errors.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// CSV of id,stratum.
    #[arg(long)]
    pub strata: Option<PathBuf>,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    /// Critical value; overrides --confidence.
    #[arg(long)]
    pub z: Option<f64>,
    /// Assumed proportion.
    #[arg(long, default_value_t = 0.5)]
    pub proportion: f64,
    /// Margin of error.
    #[arg(long, default_value_t = 0.05)]
    pub margin: f64,
    /// Seed for the stratified draw.
    #[arg(long)]
    pub seed: u64,
    /// Write the drawn ids as id,stratum to this file.
    #[arg(long)]
    pub ids_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Ground truth: a verdict ledger, or a CSV of system,has_error.
    #[arg(long)]
    pub truth: PathBuf,
    /// Predictions of the first tool as a CSV of system,has_error.
    #[arg(long)]
    pub tool: PathBuf,
    /// Predictions of the second tool: a run ledger or a CSV of system,has_error.
    #[arg(long)]
    pub model: PathBuf,
    /// Attempt read from a run ledger.
    #[arg(long, default_value_t = 1)]
    pub attempt: u32,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    /// Add 0.5 to both discordant cells when one of them is zero.
    #[arg(long)]
    pub correction: bool,
    #[arg(long, default_value = "tool")]
    pub tool_name: String,
    #[arg(long, default_value = "model")]
    pub model_name: String,
}

#[derive(Debug, Args)]
pub struct MutateArgs {
    /// Commit diff to mutate.
    #[arg(long)]
    pub patch: PathBuf,
    /// Name prefix of the written mutants; defaults to the patch file stem.
    #[arg(long)]
    pub origin: Option<String>,
    #[arg(long, default_value_t = 3)]
    pub count: usize,
    #[arg(long)]
    pub seed: u64,
    /// Directory the mutated diffs are written to.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Compile each mutant's post-commit file and report whether it fails.
    #[arg(long)]
    pub verify: bool,
    /// Tree holding the pre-commit files; files absent here are new.
    #[arg(long, requires = "verify")]
    pub before: Option<PathBuf>,
    /// Ledger recording each mutant and its verdict.
    #[arg(long)]
    pub ledger: Option<PathBuf>,
    #[command(flatten)]
    pub compiler: CompilerArgs,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("input").required(true).multiple(true).args(["patch", "patch_dir"])))]
pub struct DiffDetectArgs {
    /// Diff file; repeatable. The file stem is the system id.
    #[arg(long)]
    pub patch: Vec<PathBuf>,
    /// Directory whose *.patch and *.diff files are all sent.
    #[arg(long)]
    pub patch_dir: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub runs: u32,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("input").required(true).multiple(true).args(["file", "dataset"])))]
pub struct ExtractArgs {
    /// C source file; repeatable.
    #[arg(long)]
    pub file: Vec<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("input").required(true).args(["file", "features"])))]
pub struct EnumerateArgs {
    /// C source file whose features are enumerated.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Comma-separated feature macros.
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<String>>,
    #[arg(long, default_value_t = 8)]
    pub cap: usize,
}
