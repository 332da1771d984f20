use std::collections::BTreeMap;

use varcheck_core::evalcore::{normal_quantile, sample_size, stratified_allocate};

use crate::cli::SampleArgs;
use crate::error::CliError;
use crate::io::{self, Report};

pub fn run(args: &SampleArgs) -> Result<String, CliError> {
    if !(args.confidence > 0.0 && args.confidence < 1.0) {
        return Err(CliError::Usage(format!("confidence {} outside (0,1)", args.confidence)));
    }
    let z = args.z.unwrap_or_else(|| normal_quantile(args.confidence));
    if !(z > 0.0 && z.is_finite()) {
        return Err(CliError::Usage(format!("critical value {z} must be positive")));
    }

    let strata: Option<BTreeMap<String, Vec<String>>> = if let Some(path) = &args.truth {
        let mut s: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (id, v) in io::truth(path)? {
            s.entry(if v.has_error { "errors" } else { "compiles" }.to_string()).or_default().push(id);
        }
        Some(s)
    } else if let Some(path) = &args.strata {
        let mut s: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut seen = std::collections::BTreeSet::new();
        for (id, stratum) in io::pairs(path)? {
            if !seen.insert(id.clone()) {
                return Err(CliError::Data(format!("{}: id {id:?} appears twice", path.display())));
            }
            s.entry(stratum).or_default().push(id);
        }
        Some(s)
    } else {
        None
    };
    let population = match (&strata, args.population) {
        (Some(s), _) => s.values().map(Vec::len).sum(),
        (None, Some(n)) => n,
        (None, None) => return Err(CliError::Usage("give --population, --truth or --strata".into())),
    };

    let mut plan = sample_size(population, z, args.proportion, args.margin)?;
    if let Some(s) = &strata {
        plan = stratified_allocate(&plan, s, args.seed)?;
    }

    let mut r = Report::default();
    r.kv("population", plan.population);
    r.kv("z", format!("{:.4}", plan.z));
    r.kv("proportion", plan.p);
    r.kv("margin", plan.e);
    r.kv("n0", format!("{:.2}", plan.n0));
    r.kv("sample_size", plan.n);
    r.kv("seed", args.seed);
    for (name, stratum) in &plan.strata {
        r.line(format!("stratum\t{name}\t{}\tof\t{}", stratum.allocated, stratum.population));
    }
    if let Some(out) = &args.ids_out {
        let mut text = String::from("id,stratum\n");
        for (name, stratum) in &plan.strata {
            for id in &stratum.ids {
                text.push_str(&format!("{id},{name}\n"));
            }
        }
        io::write_file(out, &text)?;
    }
    Ok(r.into_string())
}
