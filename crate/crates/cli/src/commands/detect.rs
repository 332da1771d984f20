use std::collections::BTreeMap;
use std::path::PathBuf;

use varcheck_core::ledger::{EntryKind, LedgerEntry};
use varcheck_core::modelgw::{build_prompt, FailureTag, Gateway, PromptKind, RunRecord};

use crate::cli::{DetectArgs, DiffDetectArgs, KindArg, ModelArgs};
use crate::error::CliError;
use crate::io::{self, Report};
use crate::setup::run_pool;

struct Job {
    system_id: String,
    attempt: u32,
    prompt: String,
}

pub fn run_dataset(args: &DetectArgs) -> Result<String, CliError> {
    let kind = match args.kind {
        KindArg::FullCode => PromptKind::FullCode,
        KindArg::Diff => PromptKind::Diff,
    };
    let rows = io::dataset(&args.dataset)?;
    let systems = rows.into_iter().map(|r| (r.id, r.code)).collect();
    run_requests(&args.model, &args.out, args.runs, kind, systems)
}

pub fn run_diffs(args: &DiffDetectArgs) -> Result<String, CliError> {
    let mut paths: Vec<PathBuf> = args.patch.clone();
    if let Some(dir) = &args.patch_dir {
        for entry in std::fs::read_dir(dir).map_err(|e| CliError::data(dir.display(), e))? {
            let path = entry?.path();
            if matches!(path.extension().and_then(|e| e.to_str()), Some("patch" | "diff")) {
                paths.push(path);
            }
        }
    }
    paths.sort();
    let mut systems = Vec::with_capacity(paths.len());
    let mut seen = std::collections::BTreeSet::new();
    for path in paths {
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| CliError::Data(format!("{}: no usable file name", path.display())))?
            .to_string();
        if !seen.insert(id.clone()) {
            return Err(CliError::Data(format!("two diffs share the system id {id:?}")));
        }
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::data(path.display(), e))?;
        systems.push((id, text));
    }
    run_requests(&args.model, &args.out, args.runs, PromptKind::Diff, systems)
}

fn run_requests(
    model: &ModelArgs,
    out: &std::path::Path,
    runs: u32,
    kind: PromptKind,
    systems: Vec<(String, String)>,
) -> Result<String, CliError> {
    if runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    let gateway: Gateway = model.gateway()?;
    let mut ledger = io::create_ledger(out)?;

    let mut jobs = Vec::new();
    for (id, payload) in &systems {
        let prompt = build_prompt(kind, payload).map_err(|e| CliError::data(id, e))?;
        for attempt in 1..=runs {
            if !ledger.contains(EntryKind::ModelRun, id, attempt) {
                jobs.push(Job { system_id: id.clone(), attempt, prompt: prompt.clone() });
            }
        }
    }

    // Transport failures stay out of the ledger so that a rerun retries them.
    let mut transport_failures: Vec<(String, u32, String)> = Vec::new();
    let mut written = 0usize;
    run_pool(
        model.jobs,
        &jobs,
        |job| gateway.request(&job.system_id, job.attempt, kind, &job.prompt),
        |job, record| {
            if record.failure == Some(FailureTag::Transport) {
                let reason = record.error.clone().unwrap_or_default();
                transport_failures.push((job.system_id.clone(), job.attempt, reason));
                return Ok(());
            }
            let entry =
                LedgerEntry::new(EntryKind::ModelRun, &job.system_id, job.attempt, &record, record.latency_secs)?;
            written += usize::from(ledger.append(entry)?);
            Ok(())
        },
    )?;
    transport_failures.sort();

    let wanted: BTreeMap<&str, ()> = systems.iter().map(|(id, _)| (id.as_str(), ())).collect();
    let mut records: Vec<RunRecord> = Vec::new();
    for e in ledger.of_kind(EntryKind::ModelRun) {
        if wanted.contains_key(e.system_id.as_str()) && (1..=runs).contains(&e.attempt) {
            records.push(e.payload_as().map_err(|err| CliError::data(out.display(), err))?);
        }
    }
    records.sort_by(|a, b| (&a.system_id, a.attempt).cmp(&(&b.system_id, b.attempt)));

    let mut r = Report::default();
    r.kv("systems", systems.len());
    r.kv("attempts_per_system", runs);
    r.kv("recorded", records.len());
    r.kv("predicted_error", records.iter().filter(|x| x.predicts_error()).count());
    r.kv("malformed", records.iter().filter(|x| x.failure == Some(FailureTag::Malformed)).count());
    r.kv("truncated", records.iter().filter(|x| x.failure == Some(FailureTag::Truncated)).count());
    for rec in &records {
        let verdict = if rec.predicts_error() { "error" } else { "clean" };
        let tag = rec.failure.map_or_else(|| "ok".to_string(), |t| format!("{t:?}").to_lowercase());
        let result = rec.response.as_ref().map_or("", |x| x.result_text.as_str());
        r.line(format!(
            "run\t{}\t{}\t{verdict}\t{tag}\t{}",
            rec.system_id,
            rec.attempt,
            result.replace(['\n', '\t'], " ")
        ));
    }
    eprintln!(
        "varcheck: sent {} requests, {} recorded, {} transport failures",
        jobs.len(),
        written,
        transport_failures.len()
    );
    for (id, attempt, reason) in &transport_failures {
        eprintln!("varcheck: {id} attempt {attempt}: {reason}");
    }
    if !jobs.is_empty() && written == 0 && transport_failures.len() == jobs.len() {
        return Err(CliError::Environment(format!(
            "every request to {} failed: {}",
            model.endpoint, transport_failures[0].2
        )));
    }
    Ok(r.into_string())
}
