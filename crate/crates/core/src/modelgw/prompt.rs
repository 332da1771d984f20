use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::GatewayError;

pub const FULL_CODE_TEMPLATE: &str = include_str!("templates/full_code.txt");
pub const DIFF_TEMPLATE: &str = include_str!("templates/diff.txt");

const CODE_SLOT: &str = "{{code}}";
const DIFF_SLOT: &str = "{{diff}}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptKind {
    /// Whole configurable system; the model returns `fixed_code`.
    FullCode,
    /// Unified diff of a commit; the model returns a `fix` description.
    Diff,
}

impl PromptKind {
    pub fn template(self) -> &'static str {
        match self {
            Self::FullCode => FULL_CODE_TEMPLATE,
            Self::Diff => DIFF_TEMPLATE,
        }
    }

    fn slot(self) -> &'static str {
        match self {
            Self::FullCode => CODE_SLOT,
            Self::Diff => DIFF_SLOT,
        }
    }

    /// Keys the model must return, in template order.
    pub fn mandated_keys(self) -> [&'static str; 3] {
        match self {
            Self::FullCode => ["result", "explanation", "fixed_code"],
            Self::Diff => ["result", "explanation", "fix"],
        }
    }
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::FullCode => "full-code",
            Self::Diff => "diff",
        })
    }
}

impl FromStr for PromptKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full-code" | "full" | "code" => Ok(Self::FullCode),
            "diff" => Ok(Self::Diff),
            other => Err(format!("unknown prompt kind {other:?}")),
        }
    }
}

/// Substitutes `payload` at the template's single placeholder.
pub fn build_prompt(kind: PromptKind, payload: &str) -> Result<String, GatewayError> {
    if payload.is_empty() {
        return Err(GatewayError::EmptyPayload);
    }
    let template = kind.template();
    let (head, tail) = template.split_once(kind.slot()).expect("template carries its placeholder");
    let mut out = String::with_capacity(template.len() + payload.len());
    out.push_str(head);
    out.push_str(payload);
    out.push_str(tail);
    Ok(out)
}

/// Recovers the payload from a prompt built by [`build_prompt`].
pub fn extract_payload(kind: PromptKind, prompt: &str) -> Option<&str> {
    let (head, tail) = kind.template().split_once(kind.slot())?;
    prompt.strip_prefix(head)?.strip_suffix(tail)
}
