//! Scoring of model output against compiler ground truth, tool comparison
//! statistics and the stratified sampling plan.

mod detection;
mod fix;
mod sampling;
mod stats;

use thiserror::Error;

pub use detection::{
    compute_metrics, detection_verdict, read_tool_verdicts, Classification, ConfusionMatrix, DetectionMetrics,
    MatchMode,
};
pub use fix::{evaluate_fix, FixSummary, FixVerdict};
pub use sampling::{largest_remainder, sample_size, stratified_allocate, SamplingPlan, Stratum};
pub use stats::{
    agreement, binomial_two_sided, chi_square_1df_sf, mcnemar, normal_quantile, odds_ratio, AgreementTable, McNemar,
    OddsRatio, PValue,
};

use crate::oracle::OracleError;
use crate::varmodel::VarModelError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("record for system {record:?} scored against verdict for {truth:?}")]
    MismatchedSystem { record: String, truth: String },
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("system {0:?} is missing from one side of the comparison")]
    UniverseMismatch(String),
    #[error("no discordant pairs: McNemar's test is undefined")]
    NoDiscordantPairs,
    #[error("a discordant cell is zero (b={b}, c={c}); enable the continuity correction")]
    ZeroDiscordantCell { b: u64, c: u64 },
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("stratum {stratum:?} allocated {allocated} of only {population}")]
    StratumOverflow { stratum: String, allocated: usize, population: usize },
    #[error("fix evaluation needs a full-code response")]
    WrongKind,
    #[error("bad input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Model(#[from] VarModelError),
}

/// Formats an optional metric with two decimals, `n/a` when undefined.
pub fn fmt_metric(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.2}"))
}
