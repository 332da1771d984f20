use std::collections::BTreeMap;
use std::path::Path;

use varcheck_core::evalcore::{
    agreement, compute_metrics, fmt_metric, mcnemar, odds_ratio, Classification, ConfusionMatrix,
};

use crate::cli::CompareArgs;
use crate::error::CliError;
use crate::io::{self, Report};

fn predictions(path: &Path, attempt: u32) -> Result<BTreeMap<String, bool>, CliError> {
    if matches!(path.extension().and_then(|e| e.to_str()), Some("jsonl" | "ndjson" | "json")) {
        let runs = io::runs(path)?;
        Ok(runs.into_iter().filter(|((_, a), _)| *a == attempt).map(|((id, _), r)| (id, r.predicts_error())).collect())
    } else {
        io::bool_table(path)
    }
}

fn score(
    name: &str,
    predicted: &BTreeMap<String, bool>,
    truth: &BTreeMap<String, bool>,
    r: &mut Report,
) -> Result<BTreeMap<String, bool>, CliError> {
    let mut matrix = ConfusionMatrix::default();
    let mut correct = BTreeMap::new();
    for (id, &actual) in truth {
        let &p = predicted.get(id).ok_or_else(|| CliError::Data(format!("system {id:?} has no {name} prediction")))?;
        let class = Classification::from_flags(p, actual);
        matrix.add(class);
        correct.insert(id.clone(), class.is_correct());
    }
    if let Some(extra) = predicted.keys().find(|id| !truth.contains_key(*id)) {
        return Err(CliError::Data(format!("{name} predicts system {extra:?} which has no ground truth")));
    }
    let m = compute_metrics(&matrix)?;
    r.line(format!(
        "{name}\ttp={}\tfp={}\ttn={}\tfn={}\tprecision={}\trecall={}\taccuracy={}\tf1={}",
        matrix.tp,
        matrix.fp,
        matrix.tn,
        matrix.fn_,
        fmt_metric(m.precision),
        fmt_metric(m.recall),
        fmt_metric(m.accuracy),
        fmt_metric(m.f1)
    ));
    Ok(correct)
}

pub fn run(args: &CompareArgs) -> Result<String, CliError> {
    let truth: BTreeMap<String, bool> = io::truth(&args.truth)?.into_iter().map(|(id, v)| (id, v.has_error)).collect();
    let tool = predictions(&args.tool, args.attempt)?;
    let model = predictions(&args.model, args.attempt)?;

    let mut r = Report::default();
    r.kv("systems", truth.len());
    let tool_correct = score(&args.tool_name, &tool, &truth, &mut r)?;
    let model_correct = score(&args.model_name, &model, &truth, &mut r)?;
    let table = agreement(&tool_correct, &model_correct)?;
    r.kv("both_correct", table.both_correct);
    r.kv(&format!("only_{}_correct", args.tool_name), table.a_only);
    r.kv(&format!("only_{}_correct", args.model_name), table.b_only);
    r.kv("neither_correct", table.neither);

    let test = mcnemar(&table)?;
    r.kv("mcnemar_statistic", format!("{:.2}", test.statistic));
    r.kv("mcnemar_p_chi_square", test.p_chi_square);
    r.kv("mcnemar_p_exact", test.p_exact);
    r.kv("mcnemar_log10_p_exact", format!("{:.2}", test.p_exact.log10));

    let or = odds_ratio(&table, args.confidence, args.correction)?;
    r.kv(
        "odds_ratio",
        format!(
            "{:.2} [{:.2}, {:.2}] at {}% confidence{}",
            or.estimate,
            or.low,
            or.high,
            or.confidence * 100.0,
            if or.corrected { " (0.5 added to both discordant cells)" } else { "" }
        ),
    );
    Ok(r.into_string())
}
