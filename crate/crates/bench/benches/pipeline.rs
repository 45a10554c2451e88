use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use ner_audit_core::corpus::{parse_str, serialize_corpus, ColumnFormat};
use ner_audit_core::detector::{cross_validated_flags, flag_partition, Profile};
use ner_audit_core::diff::diff_corpora;
use ner_audit_core::rules::{replay, scan, Decision, RuleSet, Verdict};
use ner_audit_core::score::score;
use ner_audit_core::synth::{generate, perturb, SynthConfig};

const TOKENS: usize = 200_000;

fn pipeline(c: &mut Criterion) {
    let cfg = SynthConfig::with_tokens(TOKENS);
    let train = generate(&cfg, 1);
    let test = generate(&SynthConfig::with_tokens(TOKENS / 10), 2);
    let edited = perturb(&train, 0.1, &cfg.types, 3);
    let text = serialize_corpus(&train, &ColumnFormat::default());
    let profile = Profile::build(&train);
    let proposals = scan(&train, &RuleSet::builtin()).unwrap();
    let log: Vec<Decision> = proposals.iter().map(|p| Decision::new(p.id.clone(), Verdict::Accept, "bench", "t")).collect();

    let mut g = c.benchmark_group("pipeline");
    g.throughput(Throughput::Elements(train.token_count() as u64));
    g.sample_size(10);
    g.bench_function("parse", |b| b.iter(|| parse_str(black_box(&text), &ColumnFormat::default()).unwrap()));
    g.bench_function("serialize", |b| b.iter(|| serialize_corpus(black_box(&train), &ColumnFormat::default())));
    g.bench_function("profile", |b| b.iter(|| Profile::build(black_box(&train))));
    g.bench_function("flag_partition", |b| b.iter(|| flag_partition(black_box(&test), &profile).unwrap()));
    g.bench_function("cross_validated_flags", |b| b.iter(|| cross_validated_flags(black_box(&train), 10, 0).unwrap()));
    g.bench_function("scan", |b| b.iter(|| scan(black_box(&train), &RuleSet::builtin()).unwrap()));
    g.bench_function("replay_all_accepted", |b| {
        b.iter_batched(|| log.clone(), |log| replay(&train, &log, &proposals).unwrap(), BatchSize::LargeInput)
    });
    g.bench_function("diff", |b| b.iter(|| diff_corpora(black_box(&train), &edited).unwrap()));
    g.bench_function("score", |b| b.iter(|| score(black_box(&train), &edited).unwrap()));
    g.finish();
}

criterion_group!(benches, pipeline);
criterion_main!(benches);
