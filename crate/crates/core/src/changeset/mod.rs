//! Commit diffs: parsing, rendering, application to a pre-commit file and
//! single-fault mutation of added lines.

mod diff;
mod mutation;
mod verify;

use thiserror::Error;

pub use diff::{apply, apply_file, is_c_path, parse_diff, DiffLine, FileChange, Hunk, LineTag, UnifiedDiff};
pub use mutation::{applicable_sites, generate_mutants, mutate, Mutant, MutationOp, Site};
pub use verify::{verify_commit, CommitCheck, MutantCheck};

use crate::oracle::OracleError;
use crate::varmodel::VarModelError;

pub const DEFAULT_MUTANT_COUNT: usize = 3;

#[derive(Debug, Error)]
pub enum ChangesetError {
    #[error("line {line}: bad hunk header {text:?}")]
    BadHunkHeader { line: usize, text: String },
    #[error("hunk at line {line} declares -{expected_old} +{expected_new} lines but its body does not match")]
    CountMismatch { line: usize, expected_old: usize, expected_new: usize, found_old: usize, found_new: usize },
    #[error("line {line}: unexpected text between hunks: {text:?}")]
    UnexpectedLine { line: usize, text: String },
    #[error("{op} does not apply at file {file}, hunk {hunk}, line {line}")]
    InapplicableSite { op: String, file: usize, hunk: usize, line: usize },
    #[error("only {available} applicable (operator, site) pairs, {requested} requested")]
    NotEnoughSites { available: usize, requested: usize },
    #[error("cannot apply change to {path}: {reason}")]
    ApplyFailed { path: String, reason: String },
    #[error("diff does not touch {0}")]
    UnknownFile(String),
    #[error("unknown mutation operator {0:?}")]
    UnknownOp(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Model(#[from] VarModelError),
}
