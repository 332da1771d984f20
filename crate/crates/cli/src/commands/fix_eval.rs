use std::collections::BTreeMap;
use std::time::Instant;

use varcheck_core::evalcore::{evaluate_fix, fmt_metric, FixSummary, FixVerdict};
use varcheck_core::ledger::{EntryKind, LedgerEntry};
use varcheck_core::modelgw::PromptKind;
use varcheck_core::varmodel::SourceUnit;

use crate::cli::FixEvalArgs;
use crate::error::CliError;
use crate::io::{self, Report};

fn rate(summary_rate: Option<f64>, num: usize, den: usize) -> String {
    format!("{} ({num}/{den})", fmt_metric(summary_rate))
}

pub fn run(args: &FixEvalArgs) -> Result<String, CliError> {
    let runs = io::runs(&args.runs)?;
    let rows: BTreeMap<String, String> = io::dataset(&args.dataset)?.into_iter().map(|r| (r.id, r.code)).collect();
    let truth = args.truth.as_deref().map(io::truth).transpose()?;
    let mut ledger = io::create_ledger(&args.out)?;
    let mut known = io::fixes(&args.out)?;

    let records: Vec<_> = runs.values().filter(|r| r.kind == PromptKind::FullCode).collect();
    let skipped_diff = runs.len() - records.len();
    let needs_compile = records.iter().any(|r| {
        r.response.as_ref().and_then(|x| x.provided_fix()).is_some()
            && !known.contains_key(&(r.system_id.clone(), r.attempt))
    });
    let oracle = if needs_compile { Some(args.compiler.oracle()?) } else { None };

    let mut all = FixSummary::default();
    let mut expected = FixSummary::default();
    for record in &records {
        let key = (record.system_id.clone(), record.attempt);
        let Some(response) = record.response.as_ref().filter(|r| r.provided_fix().is_some()) else {
            tally(&mut all, &mut expected, truth.as_ref(), &not_provided(&record.system_id))?;
            continue;
        };
        let verdict = match known.remove(&key) {
            Some(v) => v,
            None => {
                let code = rows
                    .get(&record.system_id)
                    .ok_or_else(|| CliError::Data(format!("system {:?} is not in the dataset", record.system_id)))?;
                let unit = SourceUnit::new(&record.system_id, code)?;
                let started = Instant::now();
                let oracle = oracle.as_ref().expect("oracle built when a fix needs compiling");
                let v = evaluate_fix(&unit, response, oracle)?;
                let entry =
                    LedgerEntry::new(EntryKind::FixVerdict, &key.0, key.1, &v, started.elapsed().as_secs_f64())?;
                ledger.append(entry)?;
                v
            }
        };
        tally(&mut all, &mut expected, truth.as_ref(), &verdict)?;
    }

    let mut r = Report::default();
    r.kv("records", all.records);
    r.kv("diff_records_skipped", skipped_diff);
    r.kv("fixes_provided", all.provided);
    r.kv("fixes_compiling_in_all_products", all.correct);
    r.kv("variability_preserved", all.variability_preserved);
    match &truth {
        Some(_) => {
            r.kv("fix_expected", expected.records);
            r.kv("success_rate_where_expected", rate(expected.success_rate(), expected.correct, expected.records));
        }
        None => {
            r.kv("fix_expected", "n/a");
            r.kv("success_rate_where_expected", "n/a");
        }
    }
    r.kv("compile_rate_of_provided", rate(all.compile_rate_of_provided(), all.correct, all.provided));
    Ok(r.into_string())
}

fn not_provided(system_id: &str) -> FixVerdict {
    FixVerdict {
        system_id: system_id.to_string(),
        provided: false,
        all_products_compile: None,
        features: Vec::new(),
        failing: Vec::new(),
        dropped_features: Vec::new(),
        variability_preserved: None,
        error_categories: Default::default(),
        scan_error: None,
    }
}

fn tally(
    all: &mut FixSummary,
    expected: &mut FixSummary,
    truth: Option<&BTreeMap<String, varcheck_core::oracle::SystemVerdict>>,
    verdict: &FixVerdict,
) -> Result<(), CliError> {
    all.add(verdict);
    if let Some(truth) = truth {
        let v = truth.get(&verdict.system_id).ok_or_else(|| {
            CliError::Data(format!("system {:?} is missing from the ground truth", verdict.system_id))
        })?;
        if v.has_error {
            expected.add(verdict);
        }
    }
    Ok(())
}
