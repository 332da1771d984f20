use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use super::diagnostics::{parse_diagnostics, CategoryRules, Diagnostic, Severity};
use super::OracleError;
use crate::varmodel::Product;

/// How to invoke the C compiler used as ground truth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompilerSpec {
    pub executable: PathBuf,
    pub standard: String,
    pub extra_flags: Vec<String>,
    pub timeout: Duration,
}

pub const DEFAULT_STANDARD: &str = "c99";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

impl Default for CompilerSpec {
    fn default() -> Self {
        Self {
            executable: PathBuf::from("cc"),
            standard: DEFAULT_STANDARD.to_string(),
            extra_flags: Vec::new(),
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

impl CompilerSpec {
    pub fn new(executable: impl Into<PathBuf>) -> Self {
        Self { executable: executable.into(), ..Self::default() }
    }

    /// Picks `clang` when present on `PATH`, then `gcc`, then `cc`.
    pub fn detect() -> Result<Self, OracleError> {
        ["clang", "gcc", "cc"]
            .iter()
            .find_map(|name| which::which(name).ok())
            .map(Self::new)
            .ok_or_else(|| OracleError::CompilerNotFound("clang, gcc or cc".into()))
    }

    pub fn with_standard(mut self, standard: impl Into<String>) -> Self {
        self.standard = standard.into();
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_flags(mut self, flags: impl IntoIterator<Item = String>) -> Self {
        self.extra_flags.extend(flags);
        self
    }

    /// Resolves the executable against `PATH` when it is a bare name.
    pub fn resolve(&self) -> Result<PathBuf, OracleError> {
        which::which(&self.executable).map_err(|_| OracleError::CompilerNotFound(self.executable.display().to_string()))
    }

    /// Family guess from the executable name or its `--version` banner.
    pub fn is_clang(&self) -> bool {
        if self.executable.to_string_lossy().contains("clang") {
            return true;
        }
        Command::new(&self.executable)
            .arg("--version")
            .output()
            .map(|o| String::from_utf8_lossy(&o.stdout).contains("clang"))
            .unwrap_or(false)
    }

    /// Arguments for a syntax-and-semantics check reading the source from stdin.
    /// Enabled macros are defined to 1; disabled macros get no flag.
    pub fn arguments(&self, product: &Product) -> Vec<String> {
        let mut args = vec![
            "-fsyntax-only".to_string(),
            format!("-std={}", self.standard),
            "-fdiagnostics-color=never".to_string(),
        ];
        args.extend(product.enabled().map(|m| format!("-D{m}=1")));
        args.extend(self.extra_flags.iter().cloned());
        args.extend(["-x".to_string(), "c".to_string(), "-".to_string()]);
        args
    }
}

/// Result of compiling one product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductOutcome {
    pub product: Product,
    pub compiled: bool,
    pub diagnostics: Vec<Diagnostic>,
    pub duration_secs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit_code: Option<i32>,
}

impl ProductOutcome {
    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Error)
    }
}

/// Compiles `code` under `product` without checking that the product is
/// total over the code's own feature set.
pub fn compile_source(
    code: &str,
    product: &Product,
    spec: &CompilerSpec,
    rules: &CategoryRules,
) -> Result<ProductOutcome, OracleError> {
    let started = Instant::now();
    let mut child = Command::new(&spec.executable)
        .args(spec.arguments(product))
        .env("LC_ALL", "C")
        .env("LANG", "C")
        .stdin(Stdio::piped())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => OracleError::CompilerNotFound(spec.executable.display().to_string()),
            _ => OracleError::Io(e.to_string()),
        })?;

    let mut stderr_pipe = child.stderr.take().expect("stderr piped");
    let reader = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = stderr_pipe.read_to_string(&mut buf);
        buf
    });
    if let Some(mut stdin) = child.stdin.take() {
        // A compiler that exits early closes the pipe; its status still tells the story.
        let _ = stdin.write_all(code.as_bytes());
    }

    let status = match child.wait_timeout(spec.timeout).map_err(|e| OracleError::Io(e.to_string()))? {
        Some(status) => status,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(OracleError::CompileTimeout {
                product: product.to_string(),
                seconds: spec.timeout.as_secs_f64(),
            });
        }
    };
    let stderr = reader.join().unwrap_or_default();
    let diagnostics = parse_diagnostics(&stderr, rules);
    let has_error = diagnostics.iter().any(|d| d.severity == Severity::Error);
    if !status.success() && !has_error && diagnostics.is_empty() && !stderr.trim().is_empty() {
        return Err(OracleError::DiagnosticParseFailure { product: product.to_string(), raw: stderr });
    }
    Ok(ProductOutcome {
        product: product.clone(),
        compiled: status.success() && !has_error,
        diagnostics,
        duration_secs: started.elapsed().as_secs_f64(),
        exit_code: status.code(),
    })
}
