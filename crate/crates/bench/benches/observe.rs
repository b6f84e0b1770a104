use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mstream::ir::Signature;
use mstream::lang::{compile_source, Compiled};
use mstream::stream::{observe, run_det, sample_traces};
use mstream::DEFAULT_STATE_CAP;

fn program(name: &str) -> Compiled {
    let path = format!("{}/../../programs/{name}.ms", env!("CARGO_MANIFEST_DIR"));
    let src = std::fs::read_to_string(&path).expect("example program");
    compile_source(&src, None, &Signature::standard()).expect("compiles")
}

fn exact(c: &mut Criterion) {
    let mut group = c.benchmark_group("observe");
    for (name, n) in [("walk", 6), ("ehrenfest", 6)] {
        group.bench_with_input(BenchmarkId::new(name, n), &n, |b, &n| {
            // Compiled streams memoise their unrolling, so recompile per run
            // to measure the whole pipeline.
            b.iter_batched(
                || program(name),
                |p| observe(&p.stream, n, DEFAULT_STATE_CAP).unwrap(),
                criterion::BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

fn deterministic(c: &mut Criterion) {
    let p = program("fib");
    let closed = vec![Vec::new(); 41];
    c.bench_function("run_det/fib/40", |b| b.iter(|| run_det(&p.stream, &closed, 40).unwrap()));
}

fn sampling(c: &mut Criterion) {
    let p = program("walk");
    let closed = vec![Vec::new(); 21];
    c.bench_function("sample/walk/20x1000", |b| {
        b.iter(|| sample_traces(&p.stream, &closed, 20, 7, 1000).unwrap())
    });
}

criterion_group!(benches, exact, deterministic, sampling);
criterion_main!(benches);
