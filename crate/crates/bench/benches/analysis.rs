use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varcheck_core::changeset::{generate_mutants, parse_diff};
use varcheck_core::evalcore::{agreement, mcnemar, odds_ratio};
use varcheck_core::modelgw::{parse_response, PromptKind};
use varcheck_core::stability::{report_table, RunLedgerView};
use varcheck_core::varmodel::{enumerate_products, scan_directives, FeatureMacro};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures");

fn nested_source(depth: usize) -> String {
    let mut code = String::new();
    for i in 0..depth {
        code.push_str(&format!("#if defined(F{i}) && !defined(G{i})\nint v{i};\n"));
    }
    for _ in 0..depth {
        code.push_str("#else\nint other;\n#endif\n");
    }
    code
}

fn varmodel(c: &mut Criterion) {
    let code = nested_source(8);
    c.bench_function("scan_directives/8 nested", |b| b.iter(|| scan_directives(black_box(&code)).unwrap()));
    let features: Vec<FeatureMacro> = (0..12).map(|i| FeatureMacro::new(format!("F{i}")).unwrap()).collect();
    c.bench_function("enumerate_products/12 features", |b| {
        b.iter(|| enumerate_products(black_box(&features), 16).unwrap())
    });
}

fn responses(c: &mut Criterion) {
    let corpus = std::fs::read_to_string(format!("{FIXTURES}/responses/corpus.jsonl")).unwrap();
    let raws: Vec<String> = corpus
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["raw"].as_str().unwrap().to_string())
        .collect();
    c.bench_function("parse_response/corpus", |b| {
        b.iter(|| raws.iter().filter(|r| parse_response(black_box(r), PromptKind::FullCode).predicts_error()).count())
    });
}

fn statistics(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ids: Vec<String> = (0..5000).map(|i| format!("s{i}")).collect();
    let a = ids.iter().map(|id| (id.clone(), rng.gen_bool(0.6))).collect();
    let b = ids.iter().map(|id| (id.clone(), rng.gen_bool(0.9))).collect();
    c.bench_function("agreement+mcnemar+odds_ratio/5000", |bench| {
        bench.iter(|| {
            let t = agreement(black_box(&a), black_box(&b)).unwrap();
            (mcnemar(&t).unwrap(), odds_ratio(&t, 0.95, true).unwrap())
        })
    });

    let mut view = RunLedgerView::new();
    for s in 0..357 {
        for attempt in 1..=5 {
            let correct = rng.gen_bool(0.9);
            let answer = if correct { "A=1".to_string() } else { format!("B={}", rng.gen_range(0..2)) };
            view.insert(&format!("s{s}"), attempt, answer, correct).unwrap();
        }
    }
    c.bench_function("stability report_table/357x5", |b| b.iter(|| report_table(black_box(&view), 5).unwrap()));
}

fn mutation(c: &mut Criterion) {
    let text = std::fs::read_to_string(format!("{FIXTURES}/commits/c06_hash_table/commit.patch")).unwrap();
    let diff = parse_diff(&text).unwrap();
    c.bench_function("generate_mutants/3", |b| b.iter(|| generate_mutants(black_box(&diff), "c06", 3, 42).unwrap()));
}

criterion_group!(benches, varmodel, responses, statistics, mutation);
criterion_main!(benches);
