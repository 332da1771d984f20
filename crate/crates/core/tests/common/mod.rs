#![allow(dead_code)]

pub mod http_stub;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use varcheck_core::changeset::{parse_diff, UnifiedDiff};
use varcheck_core::oracle::{CategoryRules, CompilerSpec, Oracle};
use varcheck_core::varmodel::DEFAULT_FEATURE_CAP;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn oracle() -> Oracle {
    let spec = match std::env::var_os("VARCHECK_CC") {
        Some(cc) => CompilerSpec::new(cc),
        None => CompilerSpec::detect().expect("a C compiler on PATH"),
    };
    let jobs = std::thread::available_parallelism().map_or(2, |n| n.get());
    Oracle::with_options(spec, CategoryRules::default(), DEFAULT_FEATURE_CAP, jobs)
}

pub struct CommitFixture {
    pub name: String,
    pub diff: UnifiedDiff,
    pub raw: String,
    pub before: BTreeMap<String, String>,
    pub after: BTreeMap<String, String>,
}

fn read_tree(root: &Path) -> BTreeMap<String, String> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) {
        let Ok(entries) = fs::read_dir(dir) else { return };
        for entry in entries.map(|e| e.unwrap().path()) {
            if entry.is_dir() {
                walk(root, &entry, out);
            } else {
                let rel = entry.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, fs::read_to_string(&entry).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

pub fn commits() -> Vec<CommitFixture> {
    let mut dirs: Vec<PathBuf> =
        fs::read_dir(fixtures().join("commits")).unwrap().map(|e| e.unwrap().path()).filter(|p| p.is_dir()).collect();
    dirs.sort();
    dirs.into_iter()
        .map(|dir| {
            let raw = fs::read_to_string(dir.join("commit.patch")).unwrap();
            CommitFixture {
                name: dir.file_name().unwrap().to_string_lossy().into_owned(),
                diff: parse_diff(&raw).unwrap(),
                raw,
                before: read_tree(&dir.join("before")),
                after: read_tree(&dir.join("after")),
            }
        })
        .collect()
}
