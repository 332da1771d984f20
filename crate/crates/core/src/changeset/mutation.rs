use std::fmt;
use std::str::FromStr;

use once_cell::sync::Lazy;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::diff::{DiffLine, Hunk, LineTag, UnifiedDiff};
use super::ChangesetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MutationOp {
    KeywordSwap,
    ElifSpelling,
    DropSemicolon,
    DropComma,
    DropBrace,
    DropParen,
    BadPreprocDirective,
    DuplicateStructField,
    UndeclaredIdentifier,
    UnterminatedString,
    InvalidOperator,
    MemberAccessStar,
    DropAssignOp,
    BadLiteral,
}

impl MutationOp {
    pub const ALL: [MutationOp; 14] = [
        Self::KeywordSwap,
        Self::ElifSpelling,
        Self::DropSemicolon,
        Self::DropComma,
        Self::DropBrace,
        Self::DropParen,
        Self::BadPreprocDirective,
        Self::DuplicateStructField,
        Self::UndeclaredIdentifier,
        Self::UnterminatedString,
        Self::InvalidOperator,
        Self::MemberAccessStar,
        Self::DropAssignOp,
        Self::BadLiteral,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::KeywordSwap => "keyword-swap",
            Self::ElifSpelling => "elif-spelling",
            Self::DropSemicolon => "drop-semicolon",
            Self::DropComma => "drop-comma",
            Self::DropBrace => "drop-brace",
            Self::DropParen => "drop-paren",
            Self::BadPreprocDirective => "bad-preproc-directive",
            Self::DuplicateStructField => "duplicate-struct-field",
            Self::UndeclaredIdentifier => "undeclared-identifier",
            Self::UnterminatedString => "unterminated-string",
            Self::InvalidOperator => "invalid-operator",
            Self::MemberAccessStar => "member-access-star",
            Self::DropAssignOp => "drop-assign-op",
            Self::BadLiteral => "bad-literal",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Self::KeywordSwap => "replace `if (` with `for (`",
            Self::ElifSpelling => "write `elif` instead of `else if`",
            Self::DropSemicolon => "remove a statement-terminating semicolon",
            Self::DropComma => "remove a separating comma",
            Self::DropBrace => "remove one curly brace",
            Self::DropParen => "remove one parenthesis",
            Self::BadPreprocDirective => "misspell a preprocessor directive (`#else` becomes `#els`)",
            Self::DuplicateStructField => "declare a struct or union member twice",
            Self::UndeclaredIdentifier => "rename an identifier use to an undeclared name",
            Self::UnterminatedString => "delete the closing quote of a string literal",
            Self::InvalidOperator => "use an invalid operator such as `++=`",
            Self::MemberAccessStar => "use `*` instead of `.` for member access",
            Self::DropAssignOp => "remove an assignment operator",
            Self::BadLiteral => "append an empty exponent to an integer literal",
        }
    }
}

impl fmt::Display for MutationOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MutationOp {
    type Err = ChangesetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|op| op.name() == s || format!("{op:?}") == s)
            .ok_or_else(|| ChangesetError::UnknownOp(s.to_string()))
    }
}

/// An added line of a C file, addressed by file, hunk and line index in the hunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Site {
    pub file: usize,
    pub hunk: usize,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mutant {
    pub origin: String,
    /// 1-based position in its batch.
    pub index: usize,
    pub op: MutationOp,
    pub target: Site,
    pub path: String,
    pub original_line: String,
    pub mutated_line: String,
    pub mutated: UnifiedDiff,
}

impl Mutant {
    pub fn file_name(&self) -> String {
        format!("{}.{}.{}.patch", self.origin, self.op, self.index)
    }
}

// Lexical view of the lines a hunk contributes to the post-commit file.

struct LineScan {
    /// True for bytes outside comments and literals.
    mask: Vec<bool>,
    /// (open, close) byte offsets of string literals closed on this line.
    strings: Vec<(usize, usize)>,
}

fn scan_line(text: &str, in_block: &mut bool) -> LineScan {
    let b = text.as_bytes();
    let mut mask = vec![false; b.len()];
    let mut strings = Vec::new();
    let mut i = 0;
    while i < b.len() {
        if *in_block {
            if b[i] == b'*' && b.get(i + 1) == Some(&b'/') {
                *in_block = false;
                i += 2;
            } else {
                i += 1;
            }
            continue;
        }
        match b[i] {
            b'/' if b.get(i + 1) == Some(&b'/') => break,
            b'/' if b.get(i + 1) == Some(&b'*') => {
                *in_block = true;
                i += 2;
            }
            q @ (b'"' | b'\'') => {
                let open = i;
                i += 1;
                while i < b.len() && b[i] != q {
                    if b[i] == b'\\' {
                        i += 1;
                    }
                    i += 1;
                }
                if i < b.len() {
                    if q == b'"' {
                        strings.push((open, i));
                    }
                    i += 1;
                }
            }
            _ => {
                mask[i] = true;
                i += 1;
            }
        }
    }
    LineScan { mask, strings }
}

struct ViewLine<'a> {
    idx: usize,
    text: &'a str,
    added: bool,
    directive: bool,
    scan: LineScan,
}

impl ViewLine<'_> {
    fn code(&self) -> String {
        self.text.bytes().zip(&self.scan.mask).map(|(c, &m)| if m { c as char } else { ' ' }).collect()
    }

    fn code_at(&self, i: usize) -> Option<u8> {
        (i < self.text.len() && self.scan.mask[i]).then(|| self.text.as_bytes()[i])
    }

    fn has_code(&self) -> bool {
        self.text.bytes().zip(&self.scan.mask).any(|(c, &m)| m && !c.is_ascii_whitespace())
    }
}

fn post_view(hunk: &Hunk) -> Vec<ViewLine<'_>> {
    let mut in_block = false;
    let mut continued = false;
    let mut out = Vec::new();
    for (idx, line) in hunk.lines.iter().enumerate() {
        if !line.in_post() {
            continue;
        }
        let text = line.text.as_str();
        let directive = continued || (!in_block && text.trim_start().starts_with('#'));
        continued = directive && text.trim_end().ends_with('\\');
        let scan = scan_line(text, &mut in_block);
        out.push(ViewLine { idx, text, added: line.tag == LineTag::Added, directive, scan });
    }
    out
}

fn is_ident(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

const KEYWORDS: &[&str] = &[
    "auto",
    "break",
    "case",
    "char",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extern",
    "float",
    "for",
    "goto",
    "if",
    "inline",
    "int",
    "long",
    "register",
    "restrict",
    "return",
    "short",
    "signed",
    "sizeof",
    "static",
    "struct",
    "switch",
    "typedef",
    "union",
    "unsigned",
    "void",
    "volatile",
    "while",
    "_Bool",
    "_Complex",
    "_Imaginary",
];

/// Code-only occurrences of `word` as a whole identifier.
fn word_positions(v: &ViewLine<'_>, word: &str) -> Vec<usize> {
    let b = v.text.as_bytes();
    v.text
        .match_indices(word)
        .map(|(i, _)| i)
        .filter(|&i| {
            (i..i + word.len()).all(|k| v.scan.mask[k])
                && (i == 0 || !is_ident(b[i - 1]))
                && b.get(i + word.len()).is_none_or(|&c| !is_ident(c))
        })
        .collect()
}

fn skip_spaces(b: &[u8], mut i: usize) -> usize {
    while i < b.len() && b[i].is_ascii_whitespace() {
        i += 1;
    }
    i
}

fn prev_non_space(b: &[u8], i: usize) -> Option<u8> {
    b[..i].iter().rev().copied().find(|c| !c.is_ascii_whitespace())
}

fn splice(text: &str, start: usize, end: usize, with: &str) -> String {
    format!("{}{}{}", &text[..start], with, &text[end..])
}

/// Positions of `=` used as plain assignment or initialization.
fn single_assignments(v: &ViewLine<'_>) -> Vec<usize> {
    let b = v.text.as_bytes();
    (0..b.len())
        .filter(|&i| {
            v.code_at(i) == Some(b'=')
                && (i == 0 || !b"=!<>+-*/%&|^".contains(&b[i - 1]))
                && b.get(i + 1) != Some(&b'=')
        })
        .collect()
}

fn identifier_at(b: &[u8], i: usize) -> Option<(usize, usize)> {
    if i < b.len() && (b[i].is_ascii_alphabetic() || b[i] == b'_') {
        let end = (i..b.len()).find(|&k| !is_ident(b[k])).unwrap_or(b.len());
        Some((i, end))
    } else {
        None
    }
}

static FIELD_DECL: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"^\s*[A-Za-z_][\w\s\*]*[\s\*][A-Za-z_]\w*\s*(\[[^\]]*\]\s*)*(:\s*\w+\s*)?;\s*$").unwrap());
/// The head of a struct or union body, as it appears just before `{`.
static AGGREGATE: Lazy<Regex> = Lazy::new(|| Regex::new(r"\b(struct|union)(\s+[A-Za-z_]\w*)?\s*$").unwrap());
static DIRECTIVE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"^\s*#\s*(ifdef|ifndef|if|elif|else|endif|define|undef|include)\b").unwrap());

/// Whether the innermost open brace before `pos` opens a struct or union body.
fn inside_aggregate(view: &[ViewLine<'_>], pos: usize) -> bool {
    let mut depth = 0usize;
    for k in (0..pos).rev() {
        let v = &view[k];
        if v.directive {
            continue;
        }
        let b = v.text.as_bytes();
        for i in (0..b.len()).rev() {
            match v.code_at(i) {
                Some(b'}') => depth += 1,
                Some(b'{') if depth > 0 => depth -= 1,
                Some(b'{') => {
                    let before = v.code()[..i].to_string();
                    let opener = if before.trim().is_empty() {
                        view[..k].iter().rev().find(|w| !w.directive && w.has_code()).map(|w| w.code())
                    } else {
                        Some(before)
                    };
                    return opener.is_some_and(|o| AGGREGATE.is_match(&o));
                }
                _ => {}
            }
        }
    }
    false
}

enum Edit {
    Replace(String),
    Duplicate,
}

fn edits(op: MutationOp, view: &[ViewLine<'_>], pos: usize) -> Vec<Edit> {
    let v = &view[pos];
    if v.directive != (op == MutationOp::BadPreprocDirective) {
        return Vec::new();
    }
    let text = v.text;
    let b = text.as_bytes();
    let code_bytes = |wanted: &[u8]| -> Vec<usize> {
        (0..b.len()).filter(|&i| v.code_at(i).is_some_and(|c| wanted.contains(&c))).collect()
    };
    let replace = |v: Vec<String>| v.into_iter().map(Edit::Replace).collect();

    match op {
        MutationOp::KeywordSwap => replace(
            word_positions(v, "if")
                .into_iter()
                .filter(|&i| {
                    let j = skip_spaces(b, i + 2);
                    v.code_at(j) == Some(b'(')
                })
                .map(|i| splice(text, i, i + 2, "for"))
                .collect(),
        ),
        MutationOp::ElifSpelling => replace(
            word_positions(v, "else")
                .into_iter()
                .filter_map(|i| {
                    let j = skip_spaces(b, i + 4);
                    (j > i + 4 && word_positions(v, "if").contains(&j)).then(|| splice(text, i, j + 2, "elif"))
                })
                .collect(),
        ),
        MutationOp::DropSemicolon => {
            let Some(last) = (0..b.len()).rev().find(|&i| v.code_at(i).is_some_and(|c| !c.is_ascii_whitespace()))
            else {
                return Vec::new();
            };
            if b[last] != b';' || !v.code()[..last].chars().any(|c| !c.is_whitespace()) {
                return Vec::new();
            }
            let next = view[pos + 1..].iter().find(|w| w.directive || w.has_code());
            let ok = next.is_some_and(|w| {
                let code = w.code();
                let first = code.trim_start().bytes().next();
                !w.directive && first.is_some_and(|c| !b"}+-*/%&|^<>=?:.,)]([{\"'".contains(&c))
            });
            if ok {
                replace(vec![splice(text, last, last + 1, "")])
            } else {
                Vec::new()
            }
        }
        MutationOp::DropComma => replace(
            code_bytes(b",")
                .into_iter()
                .filter(|&i| {
                    let j = skip_spaces(b, i + 1);
                    let Some(&next) = b.get(j) else { return false };
                    let prev = prev_non_space(b, i);
                    !b"})]-+*&([".contains(&next) && !(next == b'"' && prev == Some(b'"'))
                })
                .map(|i| splice(text, i, i + 1, ""))
                .collect(),
        ),
        MutationOp::DropBrace => replace(code_bytes(b"{}").into_iter().map(|i| splice(text, i, i + 1, "")).collect()),
        MutationOp::DropParen => replace(code_bytes(b"()").into_iter().map(|i| splice(text, i, i + 1, "")).collect()),
        MutationOp::BadPreprocDirective => {
            if pos > 0 && view[pos - 1].directive && view[pos - 1].text.trim_end().ends_with('\\') {
                return Vec::new();
            }
            match DIRECTIVE.captures(text).and_then(|c| c.get(1)) {
                Some(m) => replace(vec![splice(text, m.end() - 1, m.end(), "")]),
                None => Vec::new(),
            }
        }
        MutationOp::DuplicateStructField => {
            let code = v.code();
            let first = code.split_whitespace().next().unwrap_or("");
            let statement = ["return", "goto", "case", "break", "continue", "else", "do"].contains(&first);
            if FIELD_DECL.is_match(&code)
                && !statement
                && !code.contains(['=', '{', '}', '(', ','])
                && inside_aggregate(view, pos)
            {
                vec![Edit::Duplicate]
            } else {
                Vec::new()
            }
        }
        MutationOp::UndeclaredIdentifier => {
            let mut starts: Vec<usize> = single_assignments(v)
                .into_iter()
                .map(|i| {
                    let mut j = skip_spaces(b, i + 1);
                    while j < b.len() && b"&*!-~".contains(&b[j]) && v.code_at(j).is_some() {
                        j = skip_spaces(b, j + 1);
                    }
                    j
                })
                .collect();
            starts.extend(word_positions(v, "return").into_iter().map(|i| skip_spaces(b, i + 6)).filter(|&j| j > 0));
            starts.sort_unstable();
            starts.dedup();
            replace(
                starts
                    .into_iter()
                    .filter_map(|j| identifier_at(b, j).filter(|_| v.code_at(j).is_some()))
                    .filter(|&(s, e)| {
                        let name = &text[s..e];
                        !KEYWORDS.contains(&name) && b.get(skip_spaces(b, e)) != Some(&b'(')
                    })
                    .map(|(s, e)| splice(text, s, e, &format!("{}_undeclared", &text[s..e])))
                    .collect(),
            )
        }
        MutationOp::UnterminatedString => match v.scan.strings.last() {
            Some(&(_, close)) if !text[close + 1..].contains(['"', '\'']) => {
                replace(vec![splice(text, close, close + 1, "")])
            }
            _ => Vec::new(),
        },
        MutationOp::InvalidOperator => {
            let mut out = Vec::new();
            for i in 0..b.len().saturating_sub(1) {
                let (Some(c), Some(d)) = (v.code_at(i), v.code_at(i + 1)) else { continue };
                let prev = if i > 0 { v.code_at(i - 1) } else { None };
                let after = v.code_at(i + 2);
                match (c, d) {
                    (b'+', b'=') if prev != Some(b'+') => out.push(splice(text, i, i + 2, "++=")),
                    (b'-', b'=') if prev != Some(b'-') => out.push(splice(text, i, i + 2, "--=")),
                    (b'=', b'=') if !prev.is_some_and(|p| b"=!<>".contains(&p)) && after != Some(b'=') => {
                        out.push(splice(text, i, i + 2, "==="))
                    }
                    _ => {}
                }
            }
            replace(out)
        }
        MutationOp::MemberAccessStar => replace(
            code_bytes(b".")
                .into_iter()
                .filter(|&i| {
                    if i == 0 || !b.get(i + 1).is_some_and(|&c| c.is_ascii_alphabetic() || c == b'_') {
                        return false;
                    }
                    let p = b[i - 1];
                    if p == b']' || p == b')' {
                        return true;
                    }
                    if !is_ident(p) {
                        return false;
                    }
                    let start = (0..i).rev().take_while(|&k| is_ident(b[k])).last().unwrap_or(i - 1);
                    !b[start].is_ascii_digit()
                })
                .map(|i| splice(text, i, i + 1, "*"))
                .collect(),
        ),
        MutationOp::DropAssignOp => replace(
            single_assignments(v)
                .into_iter()
                .filter(|&i| {
                    let j = skip_spaces(b, i + 1);
                    b.get(j).is_some_and(|c| !b"-+*&(".contains(c))
                })
                .map(|i| splice(text, i, i + 1, ""))
                .collect(),
        ),
        MutationOp::BadLiteral => {
            let mut out = Vec::new();
            let mut i = 0;
            while i < b.len() {
                if v.code_at(i).is_some_and(|c| c.is_ascii_digit())
                    && (i == 0 || !(is_ident(b[i - 1]) || b[i - 1] == b'.'))
                {
                    let end = (i..b.len()).find(|&k| !b[k].is_ascii_digit()).unwrap_or(b.len());
                    let next = b.get(end).copied();
                    if !next.is_some_and(|c| is_ident(c) || b".+-".contains(&c)) {
                        out.push(splice(text, end, end, "e"));
                    }
                    i = end;
                } else {
                    i += 1;
                }
            }
            replace(out)
        }
    }
}

fn line_edits(diff: &UnifiedDiff, op: MutationOp, site: Site) -> Vec<Edit> {
    let Some(file) = diff.files.get(site.file) else { return Vec::new() };
    let Some(hunk) = file.hunks.get(site.hunk) else { return Vec::new() };
    if !file.is_c_source || hunk.lines.get(site.line).map(|l| l.tag) != Some(LineTag::Added) {
        return Vec::new();
    }
    let view = post_view(hunk);
    let pos = view.iter().position(|v| v.idx == site.line).expect("added lines are in the post view");
    edits(op, &view, pos)
}

/// Added lines of C files where `op`'s textual precondition holds.
pub fn applicable_sites(diff: &UnifiedDiff, op: MutationOp) -> Vec<Site> {
    let mut sites = Vec::new();
    for (f, file) in diff.files.iter().enumerate().filter(|(_, f)| f.is_c_source) {
        for (h, hunk) in file.hunks.iter().enumerate() {
            let view = post_view(hunk);
            for (pos, v) in view.iter().enumerate() {
                if v.added && !edits(op, &view, pos).is_empty() {
                    sites.push(Site { file: f, hunk: h, line: v.idx });
                }
            }
        }
    }
    sites
}

/// Rewrites the added line at `site`. When the line offers several
/// positions for `op`, `seed` picks one.
pub fn mutate(diff: &UnifiedDiff, op: MutationOp, site: Site, seed: u64) -> Result<Mutant, ChangesetError> {
    let mut candidates = line_edits(diff, op, site);
    if candidates.is_empty() {
        return Err(ChangesetError::InapplicableSite {
            op: op.to_string(),
            file: site.file,
            hunk: site.hunk,
            line: site.line,
        });
    }
    let pick = ChaCha8Rng::seed_from_u64(seed).gen_range(0..candidates.len());
    let edit = candidates.swap_remove(pick);
    let mut mutated = diff.clone();
    let file = &mut mutated.files[site.file];
    let original_line = file.hunks[site.hunk].lines[site.line].text.clone();
    let mutated_line = match edit {
        Edit::Replace(text) => {
            file.hunks[site.hunk].lines[site.line].text = text.clone();
            text
        }
        Edit::Duplicate => {
            file.hunks[site.hunk].lines.insert(site.line + 1, DiffLine::new(LineTag::Added, original_line.clone()));
            file.hunks[site.hunk].new_count += 1;
            for later in &mut file.hunks[site.hunk + 1..] {
                later.new_start += 1;
            }
            original_line.clone()
        }
    };
    Ok(Mutant {
        origin: String::new(),
        index: 0,
        op,
        target: site,
        path: file.path.clone(),
        original_line,
        mutated_line,
        mutated,
    })
}

/// Draws `count` distinct (operator, site) pairs uniformly from all
/// applicable pairs and applies each to a copy of `diff`.
pub fn generate_mutants(
    diff: &UnifiedDiff,
    origin: &str,
    count: usize,
    seed: u64,
) -> Result<Vec<Mutant>, ChangesetError> {
    let pairs: Vec<(MutationOp, Site)> =
        MutationOp::ALL.iter().flat_map(|&op| applicable_sites(diff, op).into_iter().map(move |s| (op, s))).collect();
    if pairs.len() < count || pairs.is_empty() {
        return Err(ChangesetError::NotEnoughSites { available: pairs.len(), requested: count });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<(MutationOp, Site)> = pairs.choose_multiple(&mut rng, count).copied().collect();
    chosen.sort();
    chosen
        .into_iter()
        .enumerate()
        .map(|(i, (op, site))| {
            let mut m = mutate(diff, op, site, rng.gen())?;
            m.origin = origin.to_string();
            m.index = i + 1;
            Ok(m)
        })
        .collect()
}
