mod common;

use std::fs::File;

use varcheck_core::ledger::{EntryKind, Ledger, LedgerEntry};
use varcheck_core::stability::{attempt_accuracy, report_table, RunLedgerView, StabilityReport};

const TOL: f64 = 0.0005;

/// Plotted points for k = 1..5: pass@k, tar@k, cons@k, per-attempt accuracy.
const DETECTION: [[f64; 5]; 4] = [
    [0.9775910364, 0.9943977591, 1.0, 1.0, 1.0],
    [1.0, 0.943977591, 0.9243697479, 0.9159663866, 0.893557423],
    [0.9775910364, 0.9383753501, 0.9803921569, 0.9691876751, 0.9831932773],
    [0.9775910364, 0.9551820728, 0.9719887955, 0.9747899916, 0.9551820728],
];
const FIXING: [[f64; 5]; 4] = [
    [0.8515406162, 0.9047619048, 0.9411764706, 0.9467787115, 0.9523809524],
    [1.0, 0.8851540616, 0.8235294118, 0.7871148459, 0.7478991597],
    [0.8515406162, 0.7899159664, 0.8543417367, 0.8319327731, 0.8599439776],
    [0.8515406162, 0.8431372549, 0.8655462185, 0.8319327731, 0.8487394958],
];

fn load(name: &str) -> RunLedgerView {
    RunLedgerView::from_transcript(File::open(common::fixtures().join("ledgers").join(name)).unwrap()).unwrap()
}

fn check(view: &RunLedgerView, expected: &[[f64; 5]; 4]) -> Vec<StabilityReport> {
    assert_eq!(view.len(), 357);
    let rows = report_table(view, 5).unwrap();
    for (i, row) in rows.iter().enumerate() {
        let got = [row.pass_at_k, row.tar_at_k, row.cons_at_k, attempt_accuracy(view, i + 1).unwrap()];
        for (metric, (g, e)) in
            ["pass", "tar", "cons", "accuracy"].iter().zip(got.iter().zip(expected.iter().map(|s| s[i])))
        {
            assert!((g - e).abs() <= TOL, "{metric}@{}: got {g}, plotted {e}", i + 1);
        }
    }
    rows
}

#[test]
fn detection_points_replay() {
    let rows = check(&load("detection_k5.csv"), &DETECTION);
    assert!((rows[4].accuracy_spread - 0.022).abs() < 0.001);
    assert!((rows[0].mean_accuracy - 0.9776).abs() < 1e-4);
}

#[test]
fn fixing_points_replay() {
    let rows = check(&load("fixing_k5.csv"), &FIXING);
    assert!(rows[4].accuracy_spread <= 0.034 + 1e-9);
}

#[test]
fn jsonl_ledger_round_trip_preserves_the_report() {
    let view = load("detection_k5.csv");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("runs.jsonl");
    let mut ledger = Ledger::open(&path).unwrap();
    for system in view.system_ids().map(str::to_string).collect::<Vec<_>>() {
        for attempt in 1..=5u32 {
            let run = view.run(&system, attempt).unwrap();
            let entry = LedgerEntry::new(EntryKind::ModelRun, &system, attempt, run, 0.0).unwrap();
            assert!(ledger.append(entry).unwrap());
        }
    }
    let size = std::fs::metadata(&path).unwrap().len();
    let reopened = Ledger::open(&path).unwrap();
    let mut rebuilt = RunLedgerView::new();
    for e in reopened.of_kind(EntryKind::ModelRun) {
        let run: varcheck_core::stability::RunAnswer = e.payload_as().unwrap();
        rebuilt.insert(&e.system_id, e.attempt, run.answer, run.correct).unwrap();
    }
    assert_eq!(report_table(&rebuilt, 5).unwrap(), report_table(&view, 5).unwrap());

    let mut again = Ledger::open(&path).unwrap();
    let dup = LedgerEntry::new(EntryKind::ModelRun, reopened.entries()[0].system_id.clone(), 1, &(), 0.0).unwrap();
    assert!(!again.append(dup).unwrap());
    assert_eq!(std::fs::metadata(&path).unwrap().len(), size);
}
