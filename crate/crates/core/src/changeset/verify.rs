use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{apply, ChangesetError, Mutant, UnifiedDiff};
use crate::oracle::{ErrorCategory, Oracle, SystemVerdict};
use crate::varmodel::{enumerate_products, FeatureMacro, Product, SourceUnit};

/// Oracle verdict for one mutant's post-commit file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutantCheck {
    pub file_name: String,
    pub op: String,
    pub path: String,
    pub killed: bool,
    pub failing: Vec<Product>,
    pub error_categories: BTreeSet<ErrorCategory>,
    /// Set when the conditional-directive scanner rejects the mutated file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scanner_rejected: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommitCheck {
    pub origin: String,
    /// Every C file before the commit compiles in all its products.
    pub pre_compiles: bool,
    /// Every C file after the unmutated commit compiles in all its products.
    pub post_compiles: bool,
    pub mutants: Vec<MutantCheck>,
}

impl CommitCheck {
    pub fn all_killed(&self) -> bool {
        self.mutants.iter().all(|m| m.killed)
    }
}

fn judge(
    oracle: &Oracle,
    id: &str,
    code: &str,
    features: Option<&[FeatureMacro]>,
) -> Result<SystemVerdict, ChangesetError> {
    if code.trim().is_empty() {
        return Ok(SystemVerdict::from_outcomes(id, Vec::new(), Vec::new()));
    }
    let unit = SourceUnit::new(id, code)?;
    let features = match features {
        Some(f) => f.to_vec(),
        None => unit.features()?,
    };
    let products = enumerate_products(&features, oracle.cap())?;
    Ok(oracle.judge_products(id, code, features, &products)?)
}

/// Compiles the pre-commit files, the unmutated post-commit files and every
/// mutant's post-commit file. A mutant is compiled under the products of
/// the unmutated file, so a fault that breaks directive scanning is still
/// judged by the compiler.
pub fn verify_commit(
    origin: &str,
    diff: &UnifiedDiff,
    pre_images: &BTreeMap<String, String>,
    mutants: &[Mutant],
    oracle: &Oracle,
) -> Result<CommitCheck, ChangesetError> {
    let empty = String::new();
    let mut pre_compiles = true;
    let mut post_compiles = true;
    let mut post_features: BTreeMap<&str, Vec<FeatureMacro>> = BTreeMap::new();
    for file in diff.c_files() {
        let pre = pre_images.get(&file.path).unwrap_or(&empty);
        pre_compiles &= !judge(oracle, &format!("{origin}:pre:{}", file.path), pre, None)?.has_error;
        let post = apply(diff, &file.path, pre)?;
        let verdict = judge(oracle, &format!("{origin}:post:{}", file.path), &post, None)?;
        post_compiles &= !verdict.has_error;
        post_features.insert(&file.path, verdict.features);
    }
    let mut checks = Vec::with_capacity(mutants.len());
    for m in mutants {
        let pre = pre_images.get(&m.path).unwrap_or(&empty);
        let code = apply(&m.mutated, &m.path, pre)?;
        let scanner_rejected = SourceUnit::new(&m.path, &code).and_then(|u| u.scan()).err().map(|e| e.to_string());
        let features = post_features.get(m.path.as_str()).map(Vec::as_slice).unwrap_or(&[]);
        let verdict = judge(oracle, &m.file_name(), &code, Some(features))?;
        checks.push(MutantCheck {
            file_name: m.file_name(),
            op: m.op.to_string(),
            path: m.path.clone(),
            killed: verdict.has_error,
            error_categories: verdict.error_categories(),
            failing: verdict.failing,
            scanner_rejected,
        });
    }
    Ok(CommitCheck { origin: origin.to_string(), pre_compiles, post_compiles, mutants: checks })
}
