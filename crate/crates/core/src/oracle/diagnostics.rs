use std::fmt;
use std::str::FromStr;

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Note,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ErrorCategory {
    Redefinition,
    TypeResolution,
    UndeclaredName,
    Syntax,
    ImplicitInt,
    Preprocessor,
    InitializerSemantics,
    Other,
}

impl ErrorCategory {
    pub const ALL: [ErrorCategory; 8] = [
        Self::Redefinition,
        Self::TypeResolution,
        Self::UndeclaredName,
        Self::Syntax,
        Self::ImplicitInt,
        Self::Preprocessor,
        Self::InitializerSemantics,
        Self::Other,
    ];
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for ErrorCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown error category {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub line: Option<usize>,
    pub category: ErrorCategory,
}

/// Ordered substring rules mapping diagnostic text to a category.
///
/// The first matching rule wins; unmatched messages fall back to
/// [`ErrorCategory::Other`]. Matching is case-insensitive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryRules {
    rules: Vec<(String, ErrorCategory)>,
}

impl Default for CategoryRules {
    fn default() -> Self {
        use ErrorCategory::*;
        let rules = [
            ("redefinition", Redefinition),
            ("redeclar", Redefinition),
            ("duplicate member", Redefinition),
            ("unknown type name", TypeResolution),
            ("conflicting types", TypeResolution),
            ("incomplete", TypeResolution),
            ("never completed", TypeResolution),
            // gcc: "storage size of 'x' isn't known"
            ("storage size of", TypeResolution),
            ("undeclared identifier", UndeclaredName),
            // gcc: "'x' undeclared here (not in a function)"
            ("undeclared", UndeclaredName),
            ("expected ", Syntax),
            ("missing terminating", Syntax),
            ("type specifier missing", ImplicitInt),
            ("invalid preprocessing directive", Preprocessor),
            ("unterminated", Preprocessor),
            ("without #if", Preprocessor),
            ("initializer element is not a compile-time constant", InitializerSemantics),
            // gcc wording of the same constraint
            ("initializer element is not constant", InitializerSemantics),
        ];
        Self { rules: rules.iter().map(|(p, c)| (p.to_string(), *c)).collect() }
    }
}

impl CategoryRules {
    pub fn empty() -> Self {
        Self { rules: Vec::new() }
    }

    /// Adds a rule that takes precedence over every existing rule.
    pub fn prepend(&mut self, pattern: impl Into<String>, category: ErrorCategory) {
        self.rules.insert(0, (pattern.into().to_ascii_lowercase(), category));
    }

    pub fn classify(&self, message: &str) -> ErrorCategory {
        let lower = message.to_ascii_lowercase();
        self.rules
            .iter()
            .find(|(pattern, _)| lower.contains(pattern.as_str()))
            .map_or(ErrorCategory::Other, |(_, c)| *c)
    }
}

/// Classifies with the default rule set.
pub fn classify_error(message: &str) -> ErrorCategory {
    static DEFAULT: Lazy<CategoryRules> = Lazy::new(CategoryRules::default);
    DEFAULT.classify(message)
}

static LOCATED: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"^.*?:(\d+):(?:\d+:)? (fatal error|error|warning|note): (.*)$").unwrap());
static UNLOCATED: Lazy<Regex> = Lazy::new(|| Regex::new(r"^[^\s:]+: (fatal error|error|warning|note): (.*)$").unwrap());

/// Extracts gcc/clang style diagnostics from a compiler's stderr.
pub fn parse_diagnostics(stderr: &str, rules: &CategoryRules) -> Vec<Diagnostic> {
    stderr
        .lines()
        .filter_map(|line| {
            let (line_no, sev, msg) = if let Some(c) = LOCATED.captures(line) {
                (c[1].parse().ok(), c.get(2)?.as_str(), c.get(3)?.as_str())
            } else {
                let c = UNLOCATED.captures(line)?;
                (None, c.get(1)?.as_str(), c.get(2)?.as_str())
            };
            let severity = match sev {
                "error" | "fatal error" => Severity::Error,
                "warning" => Severity::Warning,
                _ => Severity::Note,
            };
            let message = msg.trim().to_string();
            Some(Diagnostic { severity, category: rules.classify(&message), message, line: line_no })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn categories_for_known_messages() {
        use ErrorCategory::*;
        let cases = [
            ("redefinition of 'p' with a different type: 'int' vs 'int *'", Redefinition),
            ("use of undeclared identifier 'abc'", UndeclaredName),
            ("expected ';' after top-level declarator", Syntax),
            ("expected expression", Syntax),
            ("unknown type name 'foo_t'", TypeResolution),
            ("conflicting types for 'cfrrymj'", TypeResolution),
            ("tentative definition has type 'struct info' that is never completed", TypeResolution),
            ("variable has incomplete type 'struct info'", TypeResolution),
            ("type specifier missing, defaults to 'int'", ImplicitInt),
            ("invalid preprocessing directive", Preprocessor),
            ("unterminated conditional directive", Preprocessor),
            ("initializer element is not a compile-time constant", InitializerSemantics),
            ("storage size of 'userinfo' isn't known", TypeResolution),
            ("'abc' undeclared here (not in a function)", UndeclaredName),
            ("initializer element is not constant", InitializerSemantics),
            ("duplicate member 'x'", Redefinition),
            ("something else entirely", Other),
        ];
        for (msg, want) in cases {
            assert_eq!(classify_error(msg), want, "{msg}");
        }
    }

    #[test]
    fn custom_rules_take_precedence() {
        let mut rules = CategoryRules::default();
        rules.prepend("Something Else", ErrorCategory::Syntax);
        assert_eq!(rules.classify("something else entirely"), ErrorCategory::Syntax);
        assert_eq!(CategoryRules::empty().classify("redefinition of 'x'"), ErrorCategory::Other);
    }

    #[test]
    fn parses_clang_and_gcc_streams() {
        let clang = "<stdin>:8:15: error: tentative definition has type 'struct info' that is never completed\n  struct info userinfo;\n              ^\n<stdin>:8:10: note: forward declaration of 'struct info'\n1 error generated.\n";
        let d = parse_diagnostics(clang, &CategoryRules::default());
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].severity, Severity::Error);
        assert_eq!(d[0].line, Some(8));
        assert_eq!(d[0].category, ErrorCategory::TypeResolution);
        assert_eq!(d[1].severity, Severity::Note);

        let gcc = "<stdin>:3: warning: \"B\" redefined\n    3 |   #define B 2\n<stdin>:2: note: this is the location of the previous definition\n";
        let d = parse_diagnostics(gcc, &CategoryRules::default());
        assert_eq!(d[0].severity, Severity::Warning);
        assert_eq!(d[0].line, Some(3));

        let driver = "clang: error: unknown argument: '-fbogus'\n";
        let d = parse_diagnostics(driver, &CategoryRules::default());
        assert_eq!(d[0].severity, Severity::Error);
        assert_eq!(d[0].line, None);
    }

    #[test]
    fn category_names_round_trip() {
        for c in ErrorCategory::ALL {
            assert_eq!(c.to_string().parse::<ErrorCategory>().unwrap(), c);
        }
    }
}
