use std::fs::File;

use varcheck_core::evalcore::{detection_verdict, MatchMode};
use varcheck_core::stability::{
    detection_answer_key, fix_answer_key, fix_outcome_key, render_table, report_table, RunLedgerView,
};

use crate::cli::{FixIdentity, StabilityArgs, TaskArg};
use crate::error::CliError;
use crate::io::{self, Report};

pub fn run(args: &StabilityArgs) -> Result<String, CliError> {
    if args.max_k == 0 {
        return Err(CliError::Usage("--max-k must be at least 1".into()));
    }
    let view = match (&args.transcript, &args.runs) {
        (Some(path), _) => {
            let file = File::open(path).map_err(|e| CliError::data(path.display(), e))?;
            RunLedgerView::from_transcript(file)?
        }
        (None, Some(runs)) => from_ledgers(args, runs)?,
        (None, None) => return Err(CliError::Usage("give --transcript or --runs".into())),
    };
    let rows = report_table(&view, args.max_k)?;
    let mut r = Report::default();
    r.kv("systems", view.system_ids().count());
    r.kv("max_k", args.max_k);
    r.raw(&render_table(&rows));
    Ok(r.into_string())
}

fn from_ledgers(args: &StabilityArgs, runs_path: &std::path::Path) -> Result<RunLedgerView, CliError> {
    let runs = io::runs(runs_path)?;
    let mut view = RunLedgerView::new();
    match args.task {
        TaskArg::Detection => {
            let truth_path =
                args.truth.as_deref().ok_or_else(|| CliError::Usage("the detection task needs --truth".into()))?;
            let truth = io::truth(truth_path)?;
            for ((id, attempt), record) in &runs {
                let verdict = truth
                    .get(id)
                    .ok_or_else(|| CliError::Data(format!("system {id:?} is missing from the ground truth")))?;
                let correct = detection_verdict(record, verdict, MatchMode::Emptiness)?.is_correct();
                view.insert(id, *attempt, detection_answer_key(record.response.as_ref()), correct)?;
            }
        }
        TaskArg::Fixing => {
            let fixes_path =
                args.fixes.as_deref().ok_or_else(|| CliError::Usage("the fixing task needs --fixes".into()))?;
            let fixes = io::fixes(fixes_path)?;
            for (key, record) in &runs {
                let verdict = fixes.get(key);
                let code = record.response.as_ref().and_then(|r| r.provided_fix());
                if code.is_some() && verdict.is_none() {
                    return Err(CliError::Data(format!(
                        "fix of {} attempt {} has no verdict; run fix-eval first",
                        key.0, key.1
                    )));
                }
                let answer = match args.fix_identity {
                    FixIdentity::Text => fix_answer_key(code),
                    FixIdentity::Outcome => fix_outcome_key(verdict.and_then(|v| v.all_products_compile)),
                };
                view.insert(&key.0, key.1, answer, verdict.is_some_and(|v| v.is_correct()))?;
            }
        }
    }
    Ok(view)
}
