//! Accuracy and stability over repeated model runs.
//!
//! Every metric takes the first `k` attempts of each system and averages a
//! per-system score over systems:
//!
//! * mean accuracy: fraction of the k answers that are correct;
//! * pass@k: 1 if any of the k answers is correct;
//! * tar@k: 1 if all k answers are identical, correct or not;
//! * cons@k: 1 if the k answers have a unique most frequent value and a run
//!   giving that value is correct (ties score 0);
//! * accuracy spread: max minus min over attempts j ≤ k of the accuracy of
//!   attempt j across systems.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modelgw::ModelResponse;
use crate::varmodel::format_product_set;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum StabilityError {
    #[error("system {system:?} has {have} consecutive runs from attempt 1, need {need}")]
    InsufficientRuns { system: String, have: usize, need: usize },
    #[error("ledger has no systems")]
    NoSystems,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("duplicate run for system {system:?} attempt {attempt}")]
    DuplicateRun { system: String, attempt: u32 },
    #[error("attempt indices start at 1 (system {0:?})")]
    ZeroAttempt(String),
    #[error("bad transcript: {0}")]
    BadTranscript(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunAnswer {
    /// Canonical answer key; equal keys mean identical answers.
    pub answer: String,
    pub correct: bool,
}

/// Per-system runs indexed by attempt number.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunLedgerView {
    systems: BTreeMap<String, BTreeMap<u32, RunAnswer>>,
}

impl RunLedgerView {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        system: &str,
        attempt: u32,
        answer: impl Into<String>,
        correct: bool,
    ) -> Result<(), StabilityError> {
        if attempt == 0 {
            return Err(StabilityError::ZeroAttempt(system.to_string()));
        }
        let runs = self.systems.entry(system.to_string()).or_default();
        if runs.insert(attempt, RunAnswer { answer: answer.into(), correct }).is_some() {
            return Err(StabilityError::DuplicateRun { system: system.to_string(), attempt });
        }
        Ok(())
    }

    /// Builds a view where each system's runs are given in attempt order.
    pub fn from_sequences<'a>(
        seqs: impl IntoIterator<Item = (&'a str, Vec<(String, bool)>)>,
    ) -> Result<Self, StabilityError> {
        let mut view = Self::new();
        for (system, runs) in seqs {
            for (i, (answer, correct)) in runs.into_iter().enumerate() {
                view.insert(system, i as u32 + 1, answer, correct)?;
            }
        }
        Ok(view)
    }

    /// Reads a `system,attempt,answer,correct` transcript.
    pub fn from_transcript(reader: impl Read) -> Result<Self, StabilityError> {
        #[derive(Deserialize)]
        struct Row {
            system: String,
            attempt: u32,
            answer: String,
            correct: bool,
        }
        let mut rdr = csv::Reader::from_reader(reader);
        let mut view = Self::new();
        for row in rdr.deserialize::<Row>() {
            let row = row.map_err(|e| StabilityError::BadTranscript(e.to_string()))?;
            view.insert(&row.system, row.attempt, row.answer, row.correct)?;
        }
        Ok(view)
    }

    pub fn len(&self) -> usize {
        self.systems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.systems.is_empty()
    }

    pub fn run(&self, system: &str, attempt: u32) -> Option<&RunAnswer> {
        self.systems.get(system)?.get(&attempt)
    }

    pub fn system_ids(&self) -> impl Iterator<Item = &str> {
        self.systems.keys().map(String::as_str)
    }

    /// Largest k for which every system has attempts 1..=k.
    pub fn max_k(&self) -> usize {
        self.systems.values().map(contiguous_runs).min().unwrap_or(0)
    }

    fn first_k(&self, k: usize) -> Result<Vec<Vec<&RunAnswer>>, StabilityError> {
        if k == 0 {
            return Err(StabilityError::ZeroK);
        }
        if self.systems.is_empty() {
            return Err(StabilityError::NoSystems);
        }
        self.systems
            .iter()
            .map(|(system, runs)| {
                let have = contiguous_runs(runs);
                if have < k {
                    return Err(StabilityError::InsufficientRuns { system: system.clone(), have, need: k });
                }
                Ok((1..=k as u32).map(|a| &runs[&a]).collect())
            })
            .collect()
    }

    fn average(&self, k: usize, score: impl Fn(&[&RunAnswer]) -> f64) -> Result<f64, StabilityError> {
        let runs = self.first_k(k)?;
        Ok(runs.iter().map(|r| score(r)).sum::<f64>() / runs.len() as f64)
    }
}

fn contiguous_runs(runs: &BTreeMap<u32, RunAnswer>) -> usize {
    (1..).take_while(|a| runs.contains_key(a)).count()
}

pub fn mean_accuracy(view: &RunLedgerView, k: usize) -> Result<f64, StabilityError> {
    view.average(k, |r| r.iter().filter(|a| a.correct).count() as f64 / r.len() as f64)
}

pub fn pass_at_k(view: &RunLedgerView, k: usize) -> Result<f64, StabilityError> {
    view.average(k, |r| f64::from(u8::from(r.iter().any(|a| a.correct))))
}

pub fn tar_at_k(view: &RunLedgerView, k: usize) -> Result<f64, StabilityError> {
    view.average(k, |r| f64::from(u8::from(r.iter().all(|a| a.answer == r[0].answer))))
}

pub fn cons_at_k(view: &RunLedgerView, k: usize) -> Result<f64, StabilityError> {
    view.average(k, |r| {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for a in r {
            *counts.entry(a.answer.as_str()).or_default() += 1;
        }
        let top = counts.values().copied().max().unwrap_or(0);
        let mut modes = counts.iter().filter(|(_, &c)| c == top);
        match (modes.next(), modes.next()) {
            (Some((mode, _)), None) => f64::from(u8::from(r.iter().any(|a| a.answer == *mode && a.correct))),
            _ => 0.0,
        }
    })
}

/// Accuracy of attempt `j` (1-based) across systems.
pub fn attempt_accuracy(view: &RunLedgerView, j: usize) -> Result<f64, StabilityError> {
    view.average(j, |r| f64::from(u8::from(r[r.len() - 1].correct)))
}

pub fn accuracy_spread(view: &RunLedgerView, k: usize) -> Result<f64, StabilityError> {
    view.first_k(k)?;
    let per_attempt = (1..=k).map(|j| attempt_accuracy(view, j)).collect::<Result<Vec<_>, _>>()?;
    let max = per_attempt.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = per_attempt.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(max - min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub k: usize,
    pub mean_accuracy: f64,
    pub pass_at_k: f64,
    pub tar_at_k: f64,
    pub cons_at_k: f64,
    pub accuracy_spread: f64,
    /// Accuracy of attempt k on its own.
    pub attempt_accuracy: f64,
}

pub fn report(view: &RunLedgerView, k: usize) -> Result<StabilityReport, StabilityError> {
    Ok(StabilityReport {
        k,
        mean_accuracy: mean_accuracy(view, k)?,
        pass_at_k: pass_at_k(view, k)?,
        tar_at_k: tar_at_k(view, k)?,
        cons_at_k: cons_at_k(view, k)?,
        accuracy_spread: accuracy_spread(view, k)?,
        attempt_accuracy: attempt_accuracy(view, k)?,
    })
}

/// Reports for k = 1..=max_k.
pub fn report_table(view: &RunLedgerView, max_k: usize) -> Result<Vec<StabilityReport>, StabilityError> {
    (1..=max_k).map(|k| report(view, k)).collect()
}

pub fn render_table(rows: &[StabilityReport]) -> String {
    let mut out = String::from("k\taccuracy@k\tmean_accuracy\tpass@k\ttar@k\tcons@k\tspread\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
            r.k, r.attempt_accuracy, r.mean_accuracy, r.pass_at_k, r.tar_at_k, r.cons_at_k, r.accuracy_spread
        );
    }
    out
}

/// Answer key for detection runs: the canonical failing-product set. A
/// non-empty result with no parseable product keys on its normalized text.
pub fn detection_answer_key(response: Option<&ModelResponse>) -> String {
    match response {
        None => String::new(),
        Some(r) if !r.result.is_empty() => format_product_set(&r.result),
        Some(r) if !r.result_text.is_empty() => format!("?{}", normalize_whitespace(&r.result_text)),
        Some(_) => String::new(),
    }
}

/// Answer key for fix runs compared by text.
pub fn fix_answer_key(code: Option<&str>) -> String {
    code.map(normalize_whitespace).unwrap_or_default()
}

/// Answer key for fix runs compared by compile outcome.
pub fn fix_outcome_key(all_products_compile: Option<bool>) -> String {
    match all_products_compile {
        None => "none",
        Some(true) => "compiles",
        Some(false) => "fails",
    }
    .to_string()
}

pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}
