use std::time::Instant;

use varcheck_core::ledger::{EntryKind, LedgerEntry};
use varcheck_core::oracle::{OracleError, RelabelReport, RowFailure, SystemVerdict};
use varcheck_core::varmodel::{format_product_set, SourceUnit};

use crate::cli::OracleArgs;
use crate::error::CliError;
use crate::io::{self, Report};

fn pct(rate: Option<f64>) -> String {
    rate.map_or_else(|| "n/a".to_string(), |r| format!("{:.1}%", 100.0 * r))
}

pub fn run(args: &OracleArgs) -> Result<String, CliError> {
    let rows = io::dataset(&args.dataset)?;
    let oracle = args.compiler.oracle()?;
    let mut ledger = io::create_ledger(&args.out)?;
    let mut known: std::collections::BTreeMap<String, SystemVerdict> = std::collections::BTreeMap::new();
    for e in ledger.of_kind(EntryKind::Oracle) {
        let v = e.payload_as::<SystemVerdict>().map_err(|err| CliError::data(args.out.display(), err))?;
        known.insert(e.system_id.clone(), v);
    }

    let mut relabel = RelabelReport::default();
    let mut verdicts = Vec::with_capacity(rows.len());
    let mut reused = 0usize;
    for row in &rows {
        if let Some(v) = known.remove(&row.id) {
            reused += 1;
            relabel.record(row, v.has_error);
            verdicts.push(v);
            continue;
        }
        let started = Instant::now();
        let judged =
            SourceUnit::new(&row.id, &row.code).map_err(OracleError::from).and_then(|u| oracle.judge_system(&u));
        match judged {
            Ok(v) => {
                let entry = LedgerEntry::new(EntryKind::Oracle, &row.id, 0, &v, started.elapsed().as_secs_f64())?;
                ledger.append(entry)?;
                relabel.record(row, v.has_error);
                verdicts.push(v);
            }
            Err(e) if e.is_environment() => return Err(e.into()),
            Err(e) => relabel.failures.push(RowFailure { id: row.id.clone(), error: e.to_string() }),
        }
    }

    if reused > 0 {
        eprintln!("varcheck: reused {reused} verdicts already in {}", args.out.display());
    }
    let mut r = Report::default();
    let failing = verdicts.iter().filter(|v| v.has_error).count();
    r.kv("systems", rows.len());
    r.kv("judged", verdicts.len());
    r.kv("has_error", failing);
    r.kv("compiles", verdicts.len() - failing);
    r.kv("failures", relabel.failures.len());
    r.kv("labels_compared", relabel.compared);
    r.kv("labels_disagreeing", relabel.disagreements.len());
    r.kv("drift_rate", relabel.disagreement_rate().map_or_else(|| "n/a".to_string(), |d| format!("{d:.2}")));
    r.kv(
        "claimed_compiling_but_failing",
        format!(
            "{} of {} ({})",
            relabel.claimed_compiling_but_failing,
            relabel.claimed_compiling,
            pct(relabel.false_compile_rate())
        ),
    );
    for v in &verdicts {
        let status = if v.has_error { "errors" } else { "compiles" };
        let categories: Vec<String> = v.error_categories().iter().map(|c| c.to_string()).collect();
        r.line(format!(
            "verdict\t{}\t{status}\tproducts={}\tfailing={}\tcategories={}",
            v.system_id,
            v.outcomes.len(),
            format_product_set(&v.failing),
            categories.join(",")
        ));
    }
    for d in &relabel.disagreements {
        let actual = if d.actual_has_error { "errors" } else { "compiles" };
        r.line(format!("disagreement\t{}\tclaimed={}\tactual={actual}", d.id, d.claimed));
    }
    for f in &relabel.failures {
        r.line(format!("failure\t{}\t{}", f.id, f.error));
    }
    Ok(r.into_string())
}
