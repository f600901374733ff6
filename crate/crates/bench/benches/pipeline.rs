use criterion::{black_box, criterion_group, criterion_main, Criterion};
use symchain::diffalg::{wu_chain, WuOptions};
use symchain::harness::Pipeline;
use symchain_bench::{pipeline, problem, problem_names, reduce_all, reduction_input};

fn full_pipeline(c: &mut Criterion) {
    let mut g = c.benchmark_group("pipeline");
    g.sample_size(10);
    for name in problem_names() {
        let p = problem(name);
        g.bench_function(name, |b| b.iter(|| Pipeline::run(black_box(p.clone())).unwrap()));
    }
    g.finish();
}

fn reduction(c: &mut Criterion) {
    let pl = pipeline("burgers_huxley");
    let (sp, d, chain) = reduction_input(&pl);
    c.bench_function("prem/burgers_huxley D by C", |b| b.iter(|| reduce_all(&sp, black_box(&d), &chain)));
    let dprime = pl.dprime.polys.clone();
    let rank = pl.bridge.rank.clone();
    c.bench_function("wu_chain/burgers_huxley Dprime", |b| {
        b.iter(|| wu_chain(&sp, black_box(&dprime), &rank, &WuOptions::default()).unwrap())
    });
}

criterion_group!(benches, full_pipeline, reduction);
criterion_main!(benches);
