use varcheck_core::evalcore::{compute_metrics, detection_verdict, fmt_metric, ConfusionMatrix, MatchMode};
use varcheck_core::modelgw::FailureTag;

use crate::cli::{MatchArg, MetricsArgs};
use crate::error::CliError;
use crate::io::{self, Report};

pub fn run(args: &MetricsArgs) -> Result<String, CliError> {
    let truth = io::truth(&args.truth)?;
    let runs = io::runs(&args.runs)?;
    let mode = match args.match_mode {
        MatchArg::Emptiness => MatchMode::Emptiness,
        MatchArg::Strict => MatchMode::StrictProducts,
    };
    if mode == MatchMode::StrictProducts && truth.values().any(|v| v.outcomes.is_empty() && v.has_error) {
        return Err(CliError::Usage("strict matching needs a verdict ledger as ground truth".into()));
    }

    let mut matrix = ConfusionMatrix::default();
    let (mut malformed, mut truncated, mut unrecoverable, mut missing) = (0usize, 0usize, 0usize, 0usize);
    for (id, verdict) in &truth {
        let Some(record) = runs.get(&(id.clone(), args.attempt)) else {
            missing += 1;
            continue;
        };
        match record.failure {
            Some(FailureTag::Malformed) => malformed += 1,
            Some(FailureTag::Truncated) => truncated += 1,
            _ => {}
        }
        if record.failure.is_some() && record.response.as_ref().is_none_or(|r| r.result_text.is_empty()) {
            unrecoverable += 1;
        }
        matrix.add(detection_verdict(record, verdict, mode)?);
    }
    let unknown = runs.keys().filter(|(id, a)| *a == args.attempt && !truth.contains_key(id)).count();
    if unknown > 0 {
        return Err(CliError::Data(format!("{unknown} runs belong to systems absent from the ground truth")));
    }
    if matrix.total() == 0 {
        return Err(CliError::Data(format!("no runs for attempt {} match the ground truth", args.attempt)));
    }
    let m = compute_metrics(&matrix)?;

    let mut r = Report::default();
    r.kv("attempt", args.attempt);
    r.kv("systems", matrix.total());
    r.kv("tp", matrix.tp);
    r.kv("fp", matrix.fp);
    r.kv("tn", matrix.tn);
    r.kv("fn", matrix.fn_);
    r.kv("precision", fmt_metric(m.precision));
    r.kv("recall", fmt_metric(m.recall));
    r.kv("accuracy", fmt_metric(m.accuracy));
    r.kv("f1", fmt_metric(m.f1));
    r.kv("malformed", malformed);
    r.kv("truncated", truncated);
    r.kv("parse_failures_scored_negative", unrecoverable);
    r.kv("systems_without_run", missing);
    Ok(r.into_string())
}
