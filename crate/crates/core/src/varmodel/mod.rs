//! Conditional-compilation model of a C translation unit.
//!
//! Scans `#if`/`#ifdef`/`#ifndef` directives, derives the set of externally
//! controllable feature macros and enumerates the product line they induce.

mod product;
mod scan;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use product::{
    enumerate_products, format_product, format_product_set, is_c_identifier, parse_product, FeatureMacro, Product,
    DEFAULT_FEATURE_CAP, MAX_FEATURE_CAP,
};
pub use scan::{scan_directives, Conditional, Define, DirectiveKind, DirectiveScan};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum VarModelError {
    #[error("line {line}: unbalanced conditional ({reason})")]
    UnbalancedConditional { line: usize, reason: String },
    #[error("line {line}: malformed directive `{directive}`")]
    MalformedDirective { line: usize, directive: String },
    #[error("too many feature macros: {count} exceeds cap {cap} ({})", macros.join(", "))]
    TooManyFeatures { count: usize, cap: usize, macros: Vec<String> },
    #[error("feature cap {0} exceeds the maximum of {MAX_FEATURE_CAP}")]
    CapTooLarge(usize),
    #[error("bad product syntax: {0:?}")]
    BadProductSyntax(String),
    #[error("not a C identifier: {0:?}")]
    BadIdentifier(String),
    #[error("source unit {0:?} has empty code")]
    EmptySource(String),
}

/// A C translation unit under analysis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceUnit {
    pub id: String,
    pub code: String,
    pub loc: usize,
}

impl SourceUnit {
    pub fn new(id: impl Into<String>, code: impl Into<String>) -> Result<Self, VarModelError> {
        let id = id.into();
        let code = code.into();
        if code.is_empty() {
            return Err(VarModelError::EmptySource(id));
        }
        let loc = count_loc(&code);
        Ok(Self { id, code, loc })
    }

    pub fn scan(&self) -> Result<DirectiveScan, VarModelError> {
        scan_directives(&self.code)
    }

    pub fn features(&self) -> Result<Vec<FeatureMacro>, VarModelError> {
        Ok(extract_features(&self.scan()?))
    }

    pub fn products(&self, cap: usize) -> Result<Vec<Product>, VarModelError> {
        enumerate_products(&self.features()?, cap)
    }
}

/// Number of lines with at least one non-whitespace character.
pub fn count_loc(code: &str) -> usize {
    code.lines().filter(|l| !l.trim().is_empty()).count()
}

/// Macros tested in conditionals minus those `#define`d in the unit, sorted.
pub fn extract_features(scan: &DirectiveScan) -> Vec<FeatureMacro> {
    let defined = scan.defined_macros();
    scan.tested_macros()
        .into_iter()
        .filter(|m| !defined.contains(m))
        .filter_map(|m| FeatureMacro::new(m).ok())
        .collect()
}
