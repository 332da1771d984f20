//! Compiler-backed ground truth.
//!
//! Every product of a source unit is compiled in syntax-check mode; a system
//! has an error when at least one product fails. Warnings never count.

mod compiler;
mod diagnostics;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use compiler::{compile_source, CompilerSpec, ProductOutcome, DEFAULT_STANDARD, DEFAULT_TIMEOUT};
pub use diagnostics::{classify_error, parse_diagnostics, CategoryRules, Diagnostic, ErrorCategory, Severity};

use crate::dataset::{ClaimedLabel, DatasetRow};
use crate::varmodel::{enumerate_products, FeatureMacro, Product, SourceUnit, VarModelError, DEFAULT_FEATURE_CAP};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum OracleError {
    #[error("compiler not found: {0}")]
    CompilerNotFound(String),
    #[error("compilation of product {product:?} timed out after {seconds}s")]
    CompileTimeout { product: String, seconds: f64 },
    #[error("could not parse compiler diagnostics for product {product:?}")]
    DiagnosticParseFailure { product: String, raw: String },
    #[error("product {product:?} is not total over features [{}]", features.join(","))]
    ProductMismatch { product: String, features: Vec<String> },
    #[error(transparent)]
    Model(#[from] VarModelError),
    #[error("i/o error running compiler: {0}")]
    Io(String),
}

impl OracleError {
    /// Errors caused by the environment rather than by the input.
    pub fn is_environment(&self) -> bool {
        matches!(self, Self::CompilerNotFound(_) | Self::Io(_))
    }
}

/// Per-product outcomes of one system and the derived has-error label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemVerdict {
    pub system_id: String,
    pub features: Vec<FeatureMacro>,
    pub outcomes: Vec<ProductOutcome>,
    pub has_error: bool,
    pub failing: Vec<Product>,
}

impl SystemVerdict {
    pub fn from_outcomes(
        system_id: impl Into<String>,
        features: Vec<FeatureMacro>,
        mut outcomes: Vec<ProductOutcome>,
    ) -> Self {
        outcomes.sort_by(|a, b| a.product.cmp(&b.product));
        let failing: Vec<Product> = outcomes.iter().filter(|o| !o.compiled).map(|o| o.product.clone()).collect();
        Self { system_id: system_id.into(), features, has_error: !failing.is_empty(), failing, outcomes }
    }

    pub fn outcome(&self, product: &Product) -> Option<&ProductOutcome> {
        self.outcomes.iter().find(|o| &o.product == product)
    }

    /// Distinct categories of all error diagnostics across products.
    pub fn error_categories(&self) -> BTreeSet<ErrorCategory> {
        self.outcomes.iter().flat_map(|o| o.errors().map(|d| d.category)).collect()
    }
}

/// The compiler oracle: a compiler spec, classification rules and a bounded worker pool.
pub struct Oracle {
    spec: CompilerSpec,
    rules: CategoryRules,
    cap: usize,
    pool: rayon::ThreadPool,
}

impl Oracle {
    pub fn new(spec: CompilerSpec) -> Self {
        Self::with_options(spec, CategoryRules::default(), DEFAULT_FEATURE_CAP, 1)
    }

    pub fn with_options(spec: CompilerSpec, rules: CategoryRules, cap: usize, jobs: usize) -> Self {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .expect("failed to build oracle worker pool");
        Self { spec, rules, cap, pool }
    }

    pub fn spec(&self) -> &CompilerSpec {
        &self.spec
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn compile_product(&self, unit: &SourceUnit, product: &Product) -> Result<ProductOutcome, OracleError> {
        let features = unit.features()?;
        if !product.is_total_over(&features) {
            return Err(OracleError::ProductMismatch {
                product: product.to_string(),
                features: features.iter().map(|f| f.to_string()).collect(),
            });
        }
        compile_source(&unit.code, product, &self.spec, &self.rules)
    }

    /// Compiles `code` under each product on the worker pool; the verdict
    /// lists outcomes in canonical product order regardless of scheduling.
    pub fn judge_products(
        &self,
        system_id: &str,
        code: &str,
        features: Vec<FeatureMacro>,
        products: &[Product],
    ) -> Result<SystemVerdict, OracleError> {
        let outcomes = self.pool.install(|| {
            products.par_iter().map(|p| compile_source(code, p, &self.spec, &self.rules)).collect::<Result<Vec<_>, _>>()
        })?;
        Ok(SystemVerdict::from_outcomes(system_id, features, outcomes))
    }

    pub fn judge_system(&self, unit: &SourceUnit) -> Result<SystemVerdict, OracleError> {
        let features = unit.features()?;
        let products = enumerate_products(&features, self.cap)?;
        self.judge_products(&unit.id, &unit.code, features, &products)
    }

    /// Recomputes each row's label; row failures are collected, not fatal.
    pub fn validate_dataset_labels(&self, rows: &[DatasetRow]) -> RelabelReport {
        let mut report = RelabelReport::default();
        for row in rows {
            let judged =
                SourceUnit::new(&row.id, &row.code).map_err(OracleError::from).and_then(|u| self.judge_system(&u));
            match judged {
                Ok(verdict) => report.record(row, verdict.has_error),
                Err(e) => report.failures.push(RowFailure { id: row.id.clone(), error: e.to_string() }),
            }
        }
        report
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disagreement {
    pub id: String,
    pub claimed: ClaimedLabel,
    pub actual_has_error: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowFailure {
    pub id: String,
    pub error: String,
}

/// Claimed-versus-compiler label comparison over a dataset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RelabelReport {
    /// Rows judged successfully that carried a compiles/errors claim.
    pub compared: usize,
    pub disagreements: Vec<Disagreement>,
    /// Rows claimed to compile that actually fail in some product.
    pub claimed_compiling: usize,
    pub claimed_compiling_but_failing: usize,
    pub failures: Vec<RowFailure>,
}

impl RelabelReport {
    pub fn record(&mut self, row: &DatasetRow, actual_has_error: bool) {
        let Some(claimed_error) = row.label.claims_error() else { return };
        self.compared += 1;
        if !claimed_error {
            self.claimed_compiling += 1;
            if actual_has_error {
                self.claimed_compiling_but_failing += 1;
            }
        }
        if claimed_error != actual_has_error {
            self.disagreements.push(Disagreement { id: row.id.clone(), claimed: row.label, actual_has_error });
        }
    }

    /// Fraction of compared rows whose claim was wrong; `None` when nothing was compared.
    pub fn disagreement_rate(&self) -> Option<f64> {
        (self.compared > 0).then(|| self.disagreements.len() as f64 / self.compared as f64)
    }

    /// Fraction of rows claimed to compile that actually fail somewhere.
    pub fn false_compile_rate(&self) -> Option<f64> {
        (self.claimed_compiling > 0).then(|| self.claimed_compiling_but_failing as f64 / self.claimed_compiling as f64)
    }
}
