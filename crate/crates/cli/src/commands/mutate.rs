use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;
use varcheck_core::changeset::{generate_mutants, parse_diff, verify_commit, Mutant, MutantCheck};
use varcheck_core::ledger::{EntryKind, LedgerEntry};

use crate::cli::MutateArgs;
use crate::error::CliError;
use crate::io::{self, Report};

#[derive(Serialize)]
struct MutantRecord<'a> {
    mutant: &'a Mutant,
    #[serde(skip_serializing_if = "Option::is_none")]
    check: Option<&'a MutantCheck>,
}

pub fn run(args: &MutateArgs) -> Result<String, CliError> {
    if args.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let text = std::fs::read_to_string(&args.patch).map_err(|e| CliError::data(args.patch.display(), e))?;
    let diff = parse_diff(&text).map_err(|e| CliError::data(args.patch.display(), e))?;
    let origin = match &args.origin {
        Some(o) => o.clone(),
        None => args
            .patch
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| CliError::Usage("cannot derive --origin from the patch file name".into()))?
            .to_string(),
    };
    let oracle = if args.verify { Some(args.compiler.oracle()?) } else { None };

    let started = Instant::now();
    let mutants = generate_mutants(&diff, &origin, args.count, args.seed)?;
    for m in &mutants {
        io::write_file(&args.out_dir.join(m.file_name()), &m.mutated.render())?;
    }

    let mut r = Report::default();
    r.kv("origin", &origin);
    r.kv("seed", args.seed);
    r.kv("selection", "seeded uniform draw over applicable (operator, site) pairs");
    r.kv("mutants", mutants.len());
    for m in &mutants {
        r.line(format!(
            "mutant\t{}\t{}\t{}\thunk={}\tline={}\t{}",
            m.file_name(),
            m.op,
            m.path,
            m.target.hunk,
            m.target.line,
            m.mutated_line.trim()
        ));
    }

    let check = match &oracle {
        Some(oracle) => {
            let mut pre_images = BTreeMap::new();
            if let Some(root) = &args.before {
                for file in diff.c_files() {
                    let path = root.join(&file.path);
                    if path.is_file() {
                        let code = std::fs::read_to_string(&path).map_err(|e| CliError::data(path.display(), e))?;
                        pre_images.insert(file.path.clone(), code);
                    }
                }
            }
            let check = verify_commit(&origin, &diff, &pre_images, &mutants, oracle)?;
            r.kv("pre_commit_compiles", check.pre_compiles);
            r.kv("post_commit_compiles", check.post_compiles);
            r.kv("killed", format!("{} of {}", check.mutants.iter().filter(|c| c.killed).count(), check.mutants.len()));
            for c in &check.mutants {
                let categories: Vec<String> = c.error_categories.iter().map(|x| x.to_string()).collect();
                r.line(format!(
                    "verdict\t{}\t{}\tcategories={}",
                    c.file_name,
                    if c.killed { "killed" } else { "survived" },
                    categories.join(",")
                ));
            }
            Some(check)
        }
        None => None,
    };

    if let Some(path) = &args.ledger {
        let mut ledger = io::create_ledger(path)?;
        let elapsed = started.elapsed().as_secs_f64();
        for (i, m) in mutants.iter().enumerate() {
            let record = MutantRecord { mutant: m, check: check.as_ref().map(|c| &c.mutants[i]) };
            ledger.append(LedgerEntry::new(EntryKind::Mutant, m.file_name(), 0, &record, elapsed)?)?;
        }
    }
    Ok(r.into_string())
}
