use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::modelgw::{ModelResponse, PromptKind};
use crate::oracle::{ErrorCategory, Oracle};
use crate::varmodel::{extract_features, FeatureMacro, Product, SourceUnit, VarModelError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixVerdict {
    pub system_id: String,
    pub provided: bool,
    /// `None` when no fix was provided.
    pub all_products_compile: Option<bool>,
    /// Feature macros of the fixed code.
    pub features: Vec<FeatureMacro>,
    pub failing: Vec<Product>,
    /// Features of the original system that the fix no longer tests.
    pub dropped_features: Vec<FeatureMacro>,
    pub variability_preserved: Option<bool>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub error_categories: BTreeSet<ErrorCategory>,
    /// Set when the fix's conditionals could not be scanned; it was then
    /// compiled once with no feature macros defined.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan_error: Option<String>,
}

impl FixVerdict {
    pub fn is_correct(&self) -> bool {
        self.all_products_compile == Some(true)
    }

    fn not_provided(system_id: &str) -> Self {
        Self {
            system_id: system_id.to_string(),
            provided: false,
            all_products_compile: None,
            features: Vec::new(),
            failing: Vec::new(),
            dropped_features: Vec::new(),
            variability_preserved: None,
            error_categories: BTreeSet::new(),
            scan_error: None,
        }
    }
}

/// Judges a proposed fix by deriving every product of the fixed code from
/// its own conditionals and compiling each one.
pub fn evaluate_fix(unit: &SourceUnit, response: &ModelResponse, oracle: &Oracle) -> Result<FixVerdict, EvalError> {
    if response.kind != PromptKind::FullCode {
        return Err(EvalError::WrongKind);
    }
    let Some(code) = response.provided_fix() else {
        return Ok(FixVerdict::not_provided(&unit.id));
    };
    let original: BTreeSet<FeatureMacro> = unit.features().map(|f| f.into_iter().collect()).unwrap_or_default();

    let fixed = SourceUnit::new(&unit.id, code)?;
    let (features, products, scan_error) = match fixed.scan() {
        Ok(scan) => {
            let features = extract_features(&scan);
            let products = crate::varmodel::enumerate_products(&features, oracle.cap())?;
            (features, products, None)
        }
        Err(e @ (VarModelError::UnbalancedConditional { .. } | VarModelError::MalformedDirective { .. })) => {
            (Vec::new(), vec![Product::empty()], Some(e.to_string()))
        }
        Err(e) => return Err(e.into()),
    };
    let verdict = oracle.judge_products(&unit.id, code, features.clone(), &products)?;
    let kept: BTreeSet<&FeatureMacro> = features.iter().collect();
    let dropped_features: Vec<FeatureMacro> = original.iter().filter(|f| !kept.contains(f)).cloned().collect();
    Ok(FixVerdict {
        system_id: unit.id.clone(),
        provided: true,
        all_products_compile: Some(!verdict.has_error),
        variability_preserved: Some(dropped_features.is_empty()),
        error_categories: verdict.error_categories(),
        failing: verdict.failing,
        features,
        dropped_features,
        scan_error,
    })
}

/// Aggregate fix outcomes over run records for systems with known errors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FixSummary {
    pub records: usize,
    pub provided: usize,
    pub correct: usize,
    pub variability_preserved: usize,
}

impl FixSummary {
    pub fn add(&mut self, v: &FixVerdict) {
        self.records += 1;
        self.provided += usize::from(v.provided);
        self.correct += usize::from(v.is_correct());
        self.variability_preserved += usize::from(v.is_correct() && v.variability_preserved == Some(true));
    }

    /// Correct fixes per record.
    pub fn success_rate(&self) -> Option<f64> {
        (self.records > 0).then(|| self.correct as f64 / self.records as f64)
    }

    /// Correct fixes among those actually provided.
    pub fn compile_rate_of_provided(&self) -> Option<f64> {
        (self.provided > 0).then(|| self.correct as f64 / self.provided as f64)
    }
}

impl<'a> FromIterator<&'a FixVerdict> for FixSummary {
    fn from_iter<I: IntoIterator<Item = &'a FixVerdict>>(iter: I) -> Self {
        let mut s = Self::default();
        iter.into_iter().for_each(|v| s.add(v));
        s
    }
}
