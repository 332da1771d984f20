use std::collections::BTreeSet;

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::VarModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectiveKind {
    If,
    Ifdef,
    Ifndef,
    Elif,
    Else,
    Endif,
}

/// One conditional directive and the macro names it tests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conditional {
    pub line: usize,
    pub kind: DirectiveKind,
    pub macros: Vec<String>,
    /// Set when an `#if`/`#elif` expression uses a macro as a value
    /// in arithmetic or comparison rather than as a truth value.
    pub non_boolean: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Define {
    pub line: usize,
    pub name: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectiveScan {
    pub conditionals: Vec<Conditional>,
    pub defines: Vec<Define>,
    /// Macros tested both for definedness (`#ifdef`, `defined`) and by value (`#if M`).
    pub mixed_usage: Vec<String>,
}

impl DirectiveScan {
    pub fn is_empty(&self) -> bool {
        self.conditionals.is_empty() && self.defines.is_empty()
    }

    pub fn tested_macros(&self) -> BTreeSet<&str> {
        self.conditionals.iter().flat_map(|c| c.macros.iter().map(String::as_str)).collect()
    }

    pub fn defined_macros(&self) -> BTreeSet<&str> {
        self.defines.iter().map(|d| d.name.as_str()).collect()
    }

    pub fn has_non_boolean_usage(&self) -> bool {
        self.conditionals.iter().any(|c| c.non_boolean)
    }
}

/// A logical source line after backslash-newline splicing.
#[derive(Debug, Clone)]
pub(crate) struct LogicalLine {
    /// 1-based number of the first physical line.
    pub line: usize,
    pub text: String,
}

pub(crate) fn logical_lines(code: &str) -> Vec<LogicalLine> {
    let mut out = Vec::new();
    let mut pending: Option<LogicalLine> = None;
    for (idx, raw) in code.lines().enumerate() {
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let (body, continues) = match raw.strip_suffix('\\') {
            Some(b) => (b, true),
            None => (raw, false),
        };
        let current = pending.get_or_insert_with(|| LogicalLine { line: idx + 1, text: String::new() });
        current.text.push_str(body);
        if !continues {
            out.extend(pending.take());
        }
    }
    out.extend(pending);
    out
}

/// Removes comments from one logical line, carrying block-comment state
/// across lines. String and character literals are left intact.
pub(crate) fn strip_comments(line: &str, in_block: &mut bool) -> String {
    let bytes = line.as_bytes();
    let mut out = String::with_capacity(line.len());
    let mut i = 0;
    while i < bytes.len() {
        if *in_block {
            if bytes[i] == b'*' && bytes.get(i + 1) == Some(&b'/') {
                *in_block = false;
                out.push(' ');
                i += 2;
            } else {
                i += 1;
            }
            continue;
        }
        match bytes[i] {
            b'/' if bytes.get(i + 1) == Some(&b'/') => break,
            b'/' if bytes.get(i + 1) == Some(&b'*') => {
                *in_block = true;
                i += 2;
            }
            q @ (b'"' | b'\'') => {
                let start = i;
                i += 1;
                while i < bytes.len() && bytes[i] != q {
                    if bytes[i] == b'\\' {
                        i += 1;
                    }
                    i += 1;
                }
                let end = (i + 1).min(bytes.len());
                out.push_str(&line[start..end]);
                i = end;
            }
            _ => {
                let ch = line[i..].chars().next().unwrap_or(' ');
                out.push(ch);
                i += ch.len_utf8();
            }
        }
    }
    out
}

static DIRECTIVE: Lazy<Regex> = Lazy::new(|| Regex::new(r"^\s*#\s*([A-Za-z_][A-Za-z0-9_]*)?\s*(.*)$").unwrap());
static EXPR_TOKEN: Lazy<Regex> = Lazy::new(|| {
    Regex::new(
        r"[A-Za-z_][A-Za-z0-9_]*|[0-9][A-Za-z0-9_.]*|'(?:\\.|[^'])*'|&&|\|\||==|!=|<=|>=|<<|>>|[()!<>+\-*/%&|^~?:,]",
    )
    .unwrap()
});
static LEADING_IDENT: Lazy<Regex> = Lazy::new(|| Regex::new(r"^([A-Za-z_][A-Za-z0-9_]*)").unwrap());

const OTHER_DIRECTIVES: &[&str] = &[
    "define",
    "undef",
    "include",
    "include_next",
    "error",
    "warning",
    "pragma",
    "line",
    "ident",
    "sccs",
    "import",
    "assert",
    "unassert",
];

struct ExprUsage {
    defined: Vec<String>,
    value: Vec<String>,
    non_boolean: bool,
}

fn scan_expression(expr: &str) -> ExprUsage {
    let tokens: Vec<&str> = EXPR_TOKEN.find_iter(expr).map(|m| m.as_str()).collect();
    let mut usage = ExprUsage { defined: Vec::new(), value: Vec::new(), non_boolean: false };
    let mut arithmetic = false;
    let mut i = 0;
    while i < tokens.len() {
        let tok = tokens[i];
        if tok == "defined" {
            if tokens.get(i + 1) == Some(&"(") {
                if let Some(name) = tokens.get(i + 2).filter(|t| is_ident(t)) {
                    usage.defined.push(name.to_string());
                }
                i += 4;
            } else {
                if let Some(name) = tokens.get(i + 1).filter(|t| is_ident(t)) {
                    usage.defined.push(name.to_string());
                }
                i += 2;
            }
            continue;
        }
        if is_ident(tok) {
            // Reserved identifiers (`__STDC_VERSION__`, `__has_include`) are compiler-provided.
            if !tok.starts_with("__") {
                usage.value.push(tok.to_string());
            }
        } else if matches!(
            tok,
            "==" | "!=" | "<" | ">" | "<=" | ">=" | "+" | "-" | "*" | "/" | "%" | "<<" | ">>" | "&" | "|" | "^" | "~"
        ) {
            arithmetic = true;
        }
        i += 1;
    }
    usage.non_boolean = arithmetic && !usage.value.is_empty();
    usage
}

fn is_ident(tok: &str) -> bool {
    tok.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
}

/// Classifies every directive line of `code`.
///
/// Lines inside block comments are skipped. Conditional nesting must be
/// balanced and every directive name must be one a C preprocessor knows.
pub fn scan_directives(code: &str) -> Result<DirectiveScan, VarModelError> {
    let mut scan = DirectiveScan::default();
    let mut open: Vec<(usize, bool)> = Vec::new(); // (line, seen #else)
    let mut in_block = false;
    let mut defined_ctx = BTreeSet::new();
    let mut value_ctx = BTreeSet::new();

    for logical in logical_lines(code) {
        let started_in_comment = in_block;
        let text = strip_comments(&logical.text, &mut in_block);
        if started_in_comment && !text.trim_start().starts_with('#') {
            continue;
        }
        let Some(caps) = DIRECTIVE.captures(&text) else { continue };
        let line = logical.line;
        let Some(name) = caps.get(1).map(|m| m.as_str()) else {
            // Null directive or GNU line marker (`# 12 "file"`).
            continue;
        };
        let rest = caps.get(2).map_or("", |m| m.as_str()).trim();

        let kind = match name {
            "if" => Some(DirectiveKind::If),
            "ifdef" => Some(DirectiveKind::Ifdef),
            "ifndef" => Some(DirectiveKind::Ifndef),
            "elif" | "elifdef" | "elifndef" => Some(DirectiveKind::Elif),
            "else" => Some(DirectiveKind::Else),
            "endif" => Some(DirectiveKind::Endif),
            "define" => {
                if let Some(m) = LEADING_IDENT.captures(rest) {
                    scan.defines.push(Define { line, name: m[1].to_string() });
                }
                None
            }
            other if OTHER_DIRECTIVES.contains(&other) => None,
            other => {
                return Err(VarModelError::MalformedDirective { line, directive: format!("#{other}") });
            }
        };
        let Some(kind) = kind else { continue };

        let mut macros = Vec::new();
        let mut non_boolean = false;
        match (kind, name) {
            (DirectiveKind::Ifdef | DirectiveKind::Ifndef, _) | (DirectiveKind::Elif, "elifdef" | "elifndef") => {
                match LEADING_IDENT.captures(rest) {
                    Some(m) => {
                        defined_ctx.insert(m[1].to_string());
                        macros.push(m[1].to_string());
                    }
                    None => {
                        return Err(VarModelError::MalformedDirective { line, directive: format!("#{name} {rest}") })
                    }
                }
            }
            (DirectiveKind::If | DirectiveKind::Elif, _) => {
                let usage = scan_expression(rest);
                non_boolean = usage.non_boolean;
                defined_ctx.extend(usage.defined.iter().cloned());
                value_ctx.extend(usage.value.iter().cloned());
                macros.extend(usage.defined);
                macros.extend(usage.value);
                macros.sort();
                macros.dedup();
            }
            _ => {}
        }

        match kind {
            DirectiveKind::If | DirectiveKind::Ifdef | DirectiveKind::Ifndef => open.push((line, false)),
            DirectiveKind::Elif | DirectiveKind::Else => match open.last_mut() {
                None => {
                    return Err(VarModelError::UnbalancedConditional {
                        line,
                        reason: format!("#{name} without an open conditional"),
                    })
                }
                Some((_, seen_else)) if *seen_else => {
                    return Err(VarModelError::UnbalancedConditional { line, reason: format!("#{name} after #else") })
                }
                Some((_, seen_else)) => *seen_else = kind == DirectiveKind::Else,
            },
            DirectiveKind::Endif => {
                if open.pop().is_none() {
                    return Err(VarModelError::UnbalancedConditional {
                        line,
                        reason: "#endif without an open conditional".into(),
                    });
                }
            }
        }
        scan.conditionals.push(Conditional { line, kind, macros, non_boolean });
    }

    if let Some((line, _)) = open.last() {
        return Err(VarModelError::UnbalancedConditional { line: *line, reason: "conditional never closed".into() });
    }
    scan.mixed_usage = defined_ctx.intersection(&value_ctx).cloned().collect();
    Ok(scan)
}
