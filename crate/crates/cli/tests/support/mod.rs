//! Helpers shared by the command-line test targets.
#![allow(dead_code)]

#[path = "../../../core/tests/common/http_stub.rs"]
pub mod http_stub;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;

use varcheck_core::dataset::read_dataset_file;
use varcheck_core::modelgw::{extract_payload, PromptKind};
use varcheck_core::oracle::SystemVerdict;
use varcheck_core::varmodel::format_product_set;

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Run {
    /// `key: value` lines of the report.
    pub fn fields(&self) -> BTreeMap<String, String> {
        self.stdout.lines().filter_map(|l| l.split_once(": ")).map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    pub fn field(&self, key: &str) -> String {
        self.fields().get(key).cloned().unwrap_or_else(|| panic!("no {key:?} in report:\n{}", self.stdout))
    }

    /// Tab-separated lines whose first column is `tag`.
    pub fn rows(&self, tag: &str) -> Vec<Vec<String>> {
        self.stdout
            .lines()
            .map(|l| l.split('\t').map(str::to_string).collect::<Vec<_>>())
            .filter(|cols| cols[0] == tag)
            .collect()
    }
}

pub fn varcheck(args: &[&str]) -> Run {
    varcheck_with_env(args, &[])
}

pub fn varcheck_with_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_varcheck"))
        .args(args)
        .envs(env.iter().copied())
        .output()
        .expect("spawn varcheck");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(rel: &str) -> String {
    fixtures().join(rel).display().to_string()
}

/// `--cc` arguments honouring a `VARCHECK_CC` override.
pub fn cc_args() -> Vec<String> {
    match std::env::var("VARCHECK_CC") {
        Ok(cc) => vec!["--cc".into(), cc],
        Err(_) => Vec::new(),
    }
}

pub fn with_cc<'a>(args: &[&'a str], cc: &'a [String]) -> Vec<&'a str> {
    let mut v = args.to_vec();
    v.extend(cc.iter().map(String::as_str));
    v
}

pub fn path_str(p: &Path) -> String {
    p.display().to_string()
}

/// Verdicts of an oracle ledger keyed by system id.
pub fn read_verdicts(path: &Path) -> BTreeMap<String, SystemVerdict> {
    varcheck_core::ledger::read_entries(path)
        .unwrap()
        .into_iter()
        .map(|e| (e.system_id.clone(), e.payload_as::<SystemVerdict>().unwrap()))
        .collect()
}

/// Model arguments pointing at a stub endpoint.
pub fn model_args(url: &str) -> Vec<String> {
    ["--endpoint", url, "--model", "stub", "--provider", "openai"].iter().map(|s| s.to_string()).collect()
}

/// Serves replies computed from the code in each prompt, using the failing
/// sets of `verdicts` for the systems of `dataset`.
pub fn answering_stub(
    dataset: &Path,
    verdicts: &BTreeMap<String, SystemVerdict>,
    answer: impl Fn(&str, &SystemVerdict) -> String + Send + Sync + 'static,
) -> http_stub::Stub {
    let by_code: BTreeMap<String, (String, SystemVerdict)> = read_dataset_file(dataset)
        .unwrap()
        .into_iter()
        .map(|r| {
            let v = verdicts[&r.id].clone();
            (r.code, (r.id, v))
        })
        .collect();
    http_stub::serve(Arc::new(move |_, req| {
        let prompt = http_stub::prompt_of(&req.body);
        let code = extract_payload(PromptKind::FullCode, &prompt).unwrap_or_default();
        match by_code.get(code) {
            Some((id, v)) => (200, http_stub::chat_reply(&answer(id, v))),
            None => (400, "{\"error\":\"unknown system\"}".to_string()),
        }
    }))
}

/// A reply echoing the compiler's failing set.
pub fn echo_reply(_id: &str, v: &SystemVerdict) -> String {
    serde_json::json!({"result": format_product_set(&v.failing), "explanation": "echo", "fixed_code": ""}).to_string()
}
