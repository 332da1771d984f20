use std::collections::HashMap;

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::PromptKind;
use crate::varmodel::{format_product_set, parse_product, Product};

/// A parsed model reply. Malformedness is recorded, never raised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResponse {
    pub kind: PromptKind,
    /// Failing products claimed by the model, in reply order.
    pub result: Vec<Product>,
    /// The `result` field as sent, trimmed.
    pub result_text: String,
    /// Entries of `result` that did not parse as products.
    pub dropped_entries: usize,
    pub explanation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_code: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fix_description: Option<String>,
    pub raw: String,
    /// Exactly one parseable object with the mandated keys and nothing else.
    pub wellformed: bool,
    /// No balanced object was found in the payload.
    pub truncated: bool,
}

impl ModelResponse {
    /// Detection signal: the model claims at least one failing product.
    pub fn predicts_error(&self) -> bool {
        !self.result_text.is_empty()
    }

    /// Canonical answer key for stability comparisons.
    pub fn answer_key(&self) -> String {
        format_product_set(&self.result)
    }

    /// The fixed code, when one was provided and is non-blank.
    pub fn provided_fix(&self) -> Option<&str> {
        self.fixed_code.as_deref().filter(|c| !c.trim().is_empty())
    }

    /// Serializes the mandated fields back into the reply wire format.
    pub fn to_wire(&self) -> String {
        let mut obj = Map::new();
        obj.insert("result".into(), Value::String(self.result_text.clone()));
        obj.insert("explanation".into(), Value::String(self.explanation.clone()));
        match self.kind {
            PromptKind::FullCode => {
                obj.insert("fixed_code".into(), Value::String(self.fixed_code.clone().unwrap_or_default()))
            }
            PromptKind::Diff => {
                obj.insert("fix".into(), Value::String(self.fix_description.clone().unwrap_or_default()))
            }
        };
        Value::Object(obj).to_string()
    }
}

/// Byte range of the first balanced `{...}` object, honouring JSON strings.
fn first_balanced_object(text: &str) -> Option<(usize, usize)> {
    let start = text.find('{')?;
    let bytes = text.as_bytes();
    let mut depth = 0usize;
    let mut in_string = false;
    let mut i = start;
    while i < bytes.len() {
        let b = bytes[i];
        if in_string {
            match b {
                b'\\' => i += 1,
                b'"' => in_string = false,
                _ => {}
            }
        } else {
            match b {
                b'"' => in_string = true,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        return Some((start, i + 1));
                    }
                }
                _ => {}
            }
        }
        i += 1;
    }
    None
}

static FENCE: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?s)```[A-Za-z0-9_-]*\s*\n(.*?)```").unwrap());

fn field_patterns(key: &str) -> (Regex, Regex) {
    let key = regex::escape(key);
    (
        Regex::new(&format!(r#""{key}"\s*:\s*("(?:\\.|[^"\\])*")"#)).unwrap(),
        Regex::new(&format!(r#"'{key}'\s*:\s*'((?:\\.|[^'\\])*)'"#)).unwrap(),
    )
}

/// Double- and single-quoted value patterns for every mandated key.
static FIELD_PATTERNS: Lazy<HashMap<&'static str, (Regex, Regex)>> = Lazy::new(|| {
    [PromptKind::FullCode, PromptKind::Diff]
        .into_iter()
        .flat_map(PromptKind::mandated_keys)
        .map(|k| (k, field_patterns(k)))
        .collect()
});

/// Salvages a complete string value for `key`, accepting the JSON form and
/// the single-quoted form some models emit.
fn string_field(text: &str, key: &str) -> Option<String> {
    let built;
    let (double, single) = match FIELD_PATTERNS.get(key) {
        Some(p) => p,
        None => {
            built = field_patterns(key);
            &built
        }
    };
    if let Some(quoted) = double.captures(text).and_then(|c| c.get(1)) {
        return serde_json::from_str(quoted.as_str()).ok();
    }
    let inner = single.captures(text)?.get(1)?.as_str();
    Some(inner.replace("\\'", "'").replace("\\\\", "\\"))
}

fn value_as_text(value: &Value) -> (String, bool) {
    match value {
        Value::String(s) => (s.clone(), true),
        Value::Null => (String::new(), false),
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(|v| value_as_text(v).0).collect();
            (parts.join(";"), false)
        }
        other => (other.to_string(), false),
    }
}

fn parse_result_entries(text: &str) -> (Vec<Product>, usize) {
    let mut products = Vec::new();
    let mut dropped = 0;
    for entry in text.split(';').map(str::trim).filter(|e| !e.is_empty()) {
        match parse_product(entry) {
            Ok(p) if !p.is_empty() => products.push(p),
            _ => dropped += 1,
        }
    }
    (products, dropped)
}

/// Parses a reply that should be a single JSON object with the mandated keys.
///
/// Code fences are looked through, the first balanced object is used, and
/// any deviation from the exact contract clears `wellformed`. When no
/// balanced object exists the reply is marked truncated and complete string
/// fields are salvaged from the partial text.
pub fn parse_response(raw: &str, kind: PromptKind) -> ModelResponse {
    let fenced = FENCE.captures(raw).and_then(|c| c.get(1)).map(|m| m.as_str());
    let haystack = fenced.unwrap_or(raw);
    let [_, _, code_key] = kind.mandated_keys();

    let mut fields: Map<String, Value> = Map::new();
    let mut wellformed = false;
    let truncated;
    match first_balanced_object(haystack) {
        Some((start, end)) => {
            truncated = false;
            let object = &haystack[start..end];
            match serde_json::from_str::<Map<String, Value>>(object) {
                Ok(map) => {
                    let exact_keys = map.len() == 3 && kind.mandated_keys().iter().all(|k| map.contains_key(*k));
                    let all_strings = map.values().all(Value::is_string);
                    wellformed = exact_keys && all_strings && raw.trim() == object;
                    fields = map;
                }
                Err(_) => {
                    for key in kind.mandated_keys() {
                        if let Some(v) = string_field(object, key) {
                            fields.insert(key.to_string(), Value::String(v));
                        }
                    }
                }
            }
        }
        None => {
            truncated = raw.contains('{') || raw.trim().is_empty();
            for key in kind.mandated_keys() {
                if let Some(v) = string_field(haystack, key) {
                    fields.insert(key.to_string(), Value::String(v));
                }
            }
        }
    }

    let (result_text, result_ok) = fields.get("result").map_or((String::new(), false), value_as_text);
    let result_text = result_text.trim().to_string();
    let (result, dropped_entries) = parse_result_entries(&result_text);
    let explanation = fields.get("explanation").map(|v| value_as_text(v).0).unwrap_or_default();
    let code_field = fields.get(code_key).map(|v| value_as_text(v).0);
    let (fixed_code, fix_description) = match kind {
        PromptKind::FullCode => (code_field, None),
        PromptKind::Diff => (None, code_field),
    };

    ModelResponse {
        kind,
        result,
        result_text,
        dropped_entries,
        explanation,
        fixed_code,
        fix_description,
        raw: raw.to_string(),
        wellformed: wellformed && result_ok,
        truncated,
    }
}
