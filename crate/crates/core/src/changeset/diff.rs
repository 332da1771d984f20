use std::fmt::Write as _;

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::ChangesetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineTag {
    Context,
    Added,
    Removed,
    /// `\ No newline at end of file`
    NoNewline,
}

impl LineTag {
    fn prefix(self) -> char {
        match self {
            Self::Context => ' ',
            Self::Added => '+',
            Self::Removed => '-',
            Self::NoNewline => '\\',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffLine {
    pub tag: LineTag,
    /// Line content without the tag character.
    pub text: String,
}

impl DiffLine {
    pub fn new(tag: LineTag, text: impl Into<String>) -> Self {
        Self { tag, text: text.into() }
    }

    /// Part of the post-commit file.
    pub fn in_post(&self) -> bool {
        matches!(self.tag, LineTag::Context | LineTag::Added)
    }

    /// Part of the pre-commit file.
    pub fn in_pre(&self) -> bool {
        matches!(self.tag, LineTag::Context | LineTag::Removed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hunk {
    pub old_start: usize,
    pub old_count: usize,
    pub new_start: usize,
    pub new_count: usize,
    /// Text after the closing `@@`, usually a function name.
    pub section: String,
    pub lines: Vec<DiffLine>,
}

impl Hunk {
    pub fn header(&self) -> String {
        format!("@@ -{},{} +{},{} @@{}", self.old_start, self.old_count, self.new_start, self.new_count, self.section)
    }

    /// Whether the header counts match the body.
    pub fn counts_consistent(&self) -> bool {
        let old = self.lines.iter().filter(|l| l.in_pre()).count();
        let new = self.lines.iter().filter(|l| l.in_post()).count();
        (old, new) == (self.old_count, self.new_count)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChange {
    /// Post-commit path, or the pre-commit path for deletions.
    pub path: String,
    pub is_c_source: bool,
    /// Every line before the first hunk (`diff --git`, `index`, `---`, `+++`, ...), verbatim.
    pub header: Vec<String>,
    pub hunks: Vec<Hunk>,
}

impl FileChange {
    pub fn added_lines(&self) -> usize {
        self.hunks.iter().flat_map(|h| &h.lines).filter(|l| l.tag == LineTag::Added).count()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnifiedDiff {
    /// Lines before the first file, such as commit metadata.
    pub preamble: Vec<String>,
    pub files: Vec<FileChange>,
    /// Lines after the last hunk that start no new file.
    pub trailer: Vec<String>,
}

impl UnifiedDiff {
    pub fn file(&self, path: &str) -> Option<&FileChange> {
        self.files.iter().find(|f| f.path == path)
    }

    pub fn c_files(&self) -> impl Iterator<Item = &FileChange> {
        self.files.iter().filter(|f| f.is_c_source)
    }

    /// Serializes the diff. Hunk headers always carry explicit counts.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for line in &self.preamble {
            let _ = writeln!(out, "{line}");
        }
        for file in &self.files {
            for line in &file.header {
                let _ = writeln!(out, "{line}");
            }
            for hunk in &file.hunks {
                let _ = writeln!(out, "{}", hunk.header());
                for line in &hunk.lines {
                    let _ = writeln!(out, "{}{}", line.tag.prefix(), line.text);
                }
            }
        }
        for line in &self.trailer {
            let _ = writeln!(out, "{line}");
        }
        out
    }
}

pub fn is_c_path(path: &str) -> bool {
    path.ends_with(".c") || path.ends_with(".h")
}

static HUNK_HEADER: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@(.*)$").unwrap());

fn strip_side(path: &str, side: char) -> Option<String> {
    let path = path.split('\t').next().unwrap_or(path).trim_end();
    if path == "/dev/null" {
        return None;
    }
    let prefix = format!("{side}/");
    Some(path.strip_prefix(&prefix).unwrap_or(path).to_string())
}

fn path_from_header(header: &[String]) -> String {
    let new = header.iter().find_map(|l| l.strip_prefix("+++ ")).and_then(|p| strip_side(p, 'b'));
    let old = header.iter().find_map(|l| l.strip_prefix("--- ")).and_then(|p| strip_side(p, 'a'));
    new.or(old)
        .or_else(|| {
            header
                .iter()
                .find_map(|l| l.strip_prefix("diff --git "))
                .and_then(|rest| rest.rsplit_once(" b/").map(|(_, b)| b.to_string()))
        })
        .unwrap_or_default()
}

/// Parses a unified diff, keeping every byte needed to render it back.
pub fn parse_diff(text: &str) -> Result<UnifiedDiff, ChangesetError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut diff = UnifiedDiff::default();
    let mut pending: Vec<String> = Vec::new();
    let mut current: Option<FileChange> = None;
    let mut i = 0;

    let starts_file = |i: usize, current: &Option<FileChange>| {
        let line = lines[i];
        if line.starts_with("diff ") {
            return true;
        }
        let plain_header = line.starts_with("--- ") && lines.get(i + 1).is_some_and(|n| n.starts_with("+++ "));
        plain_header
            && current.as_ref().is_none_or(|f| !f.hunks.is_empty() || f.header.iter().any(|h| h.starts_with("--- ")))
    };

    while i < lines.len() {
        let line = lines[i];
        if starts_file(i, &current) {
            if let Some(mut done) = current.take() {
                done.path = path_from_header(&done.header);
                done.is_c_source = is_c_path(&done.path);
                diff.files.push(done);
            }
            let mut header = std::mem::take(&mut pending);
            header.push(line.to_string());
            current = Some(FileChange { path: String::new(), is_c_source: false, header, hunks: Vec::new() });
            i += 1;
            continue;
        }
        let Some(file) = current.as_mut() else {
            diff.preamble.push(line.to_string());
            i += 1;
            continue;
        };
        if line.starts_with("@@") {
            let caps = HUNK_HEADER
                .captures(line)
                .ok_or_else(|| ChangesetError::BadHunkHeader { line: i + 1, text: line.to_string() })?;
            let num = |k: usize, default: usize| caps.get(k).map_or(Ok(default), |m| m.as_str().parse::<usize>());
            let bad = |_| ChangesetError::BadHunkHeader { line: i + 1, text: line.to_string() };
            let mut hunk = Hunk {
                old_start: num(1, 0).map_err(bad)?,
                old_count: num(2, 1).map_err(bad)?,
                new_start: num(3, 0).map_err(bad)?,
                new_count: num(4, 1).map_err(bad)?,
                section: caps.get(5).map_or("", |m| m.as_str()).to_string(),
                lines: Vec::new(),
            };
            if !pending.is_empty() {
                let at = i - pending.len() + 1;
                return Err(ChangesetError::UnexpectedLine { line: at, text: pending.swap_remove(0) });
            }
            let header_line = i + 1;
            i += 1;
            let (mut old, mut new) = (0, 0);
            while i < lines.len() {
                let body = lines[i];
                let full = old >= hunk.old_count && new >= hunk.new_count;
                let tag = match body.chars().next() {
                    Some('\\') => LineTag::NoNewline,
                    _ if full => break,
                    Some(' ') | None => LineTag::Context,
                    Some('+') => LineTag::Added,
                    Some('-') => LineTag::Removed,
                    _ => break,
                };
                match tag {
                    LineTag::Context => {
                        old += 1;
                        new += 1;
                    }
                    LineTag::Added => new += 1,
                    LineTag::Removed => old += 1,
                    LineTag::NoNewline => {}
                }
                let text = if body.is_empty() { "" } else { &body[1..] };
                hunk.lines.push(DiffLine::new(tag, text));
                i += 1;
            }
            let overflow = i < lines.len() && {
                let next = lines[i];
                (next.starts_with('+') && !next.starts_with("+++ "))
                    || (next.starts_with('-') && next != "-- " && !next.starts_with("--- "))
                    || next.starts_with(' ')
            };
            if old != hunk.old_count || new != hunk.new_count || overflow {
                let (found_old, found_new) = if overflow { (usize::MAX, usize::MAX) } else { (old, new) };
                return Err(ChangesetError::CountMismatch {
                    line: header_line,
                    expected_old: hunk.old_count,
                    expected_new: hunk.new_count,
                    found_old,
                    found_new,
                });
            }
            file.hunks.push(hunk);
            continue;
        }
        if file.hunks.is_empty() {
            file.header.push(line.to_string());
        } else {
            pending.push(line.to_string());
        }
        i += 1;
    }
    if let Some(mut done) = current.take() {
        done.path = path_from_header(&done.header);
        done.is_c_source = is_c_path(&done.path);
        diff.files.push(done);
    }
    diff.trailer = pending;
    Ok(diff)
}

/// Applies the hunks of `file` to the pre-commit text, checking every
/// context and removed line.
pub fn apply_file(file: &FileChange, pre: &str) -> Result<String, ChangesetError> {
    let fail = |reason: String| ChangesetError::ApplyFailed { path: file.path.clone(), reason };
    let pre_lines: Vec<&str> = pre.lines().collect();
    let mut out: Vec<&str> = Vec::with_capacity(pre_lines.len());
    let mut cursor = 0usize;
    let mut final_newline = pre.is_empty() || pre.ends_with('\n');
    for (h, hunk) in file.hunks.iter().enumerate() {
        let start = if hunk.old_count == 0 { hunk.old_start } else { hunk.old_start.saturating_sub(1) };
        if start < cursor || start > pre_lines.len() {
            return Err(fail(format!("hunk {} starts at line {} outside the file", h + 1, hunk.old_start)));
        }
        out.extend_from_slice(&pre_lines[cursor..start]);
        cursor = start;
        let mut last_tag = None;
        for line in &hunk.lines {
            match line.tag {
                LineTag::Context | LineTag::Removed => {
                    if pre_lines.get(cursor) != Some(&line.text.as_str()) {
                        return Err(fail(format!("hunk {} does not match at line {}", h + 1, cursor + 1)));
                    }
                    if line.tag == LineTag::Context {
                        out.push(&line.text);
                    }
                    cursor += 1;
                }
                LineTag::Added => out.push(&line.text),
                LineTag::NoNewline => {
                    if last_tag != Some(LineTag::Removed) {
                        final_newline = false;
                    }
                }
            }
            if line.tag != LineTag::NoNewline {
                last_tag = Some(line.tag);
            }
        }
    }
    out.extend_from_slice(&pre_lines[cursor..]);
    let mut text = out.join("\n");
    if final_newline && !text.is_empty() {
        text.push('\n');
    }
    Ok(text)
}

/// Applies the change for `path` to its pre-commit text.
pub fn apply(diff: &UnifiedDiff, path: &str, pre: &str) -> Result<String, ChangesetError> {
    let file = diff.file(path).ok_or_else(|| ChangesetError::UnknownFile(path.to_string()))?;
    apply_file(file, pre)
}
