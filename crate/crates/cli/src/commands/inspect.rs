use varcheck_core::varmodel::{enumerate_products, FeatureMacro, SourceUnit};

use crate::cli::{EnumerateArgs, ExtractArgs};
use crate::error::CliError;
use crate::io::{self, Report};

fn read_unit(path: &std::path::Path) -> Result<SourceUnit, CliError> {
    let code = std::fs::read_to_string(path).map_err(|e| CliError::data(path.display(), e))?;
    Ok(SourceUnit::new(path.display().to_string(), code)?)
}

pub fn extract(args: &ExtractArgs) -> Result<String, CliError> {
    let mut units = Vec::new();
    for path in &args.file {
        units.push(read_unit(path)?);
    }
    if let Some(path) = &args.dataset {
        for row in io::dataset(path)? {
            units.push(SourceUnit::new(row.id, row.code)?);
        }
    }
    let mut r = Report::default();
    for unit in &units {
        let scan = unit.scan().map_err(|e| CliError::data(&unit.id, e))?;
        let features = unit.features()?;
        let names: Vec<&str> = features.iter().map(FeatureMacro::as_str).collect();
        let note = if scan.has_non_boolean_usage() { "\tnon-boolean-usage" } else { "" };
        r.line(format!("{}\t{}\t{}{note}", unit.id, features.len(), names.join(",")));
    }
    Ok(r.into_string())
}

pub fn enumerate(args: &EnumerateArgs) -> Result<String, CliError> {
    let features = match (&args.file, &args.features) {
        (Some(path), _) => read_unit(path)?.features()?,
        (None, Some(names)) => {
            let mut out: Vec<FeatureMacro> = Vec::new();
            for name in names.iter().map(|n| n.trim()).filter(|n| !n.is_empty()) {
                let f = FeatureMacro::new(name).map_err(|e| CliError::Usage(e.to_string()))?;
                if !out.contains(&f) {
                    out.push(f);
                }
            }
            out
        }
        (None, None) => return Err(CliError::Usage("give --file or --features".into())),
    };
    let products = enumerate_products(&features, args.cap)?;
    let mut r = Report::default();
    r.kv("features", features.len());
    r.kv("products", products.len());
    for p in &products {
        r.line(if p.is_empty() { "(no features)".to_string() } else { p.to_string() });
    }
    Ok(r.into_string())
}
