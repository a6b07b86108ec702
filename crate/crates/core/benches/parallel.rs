use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use iris_core::cmetrics::analyze_c;
use iris_core::select::{kmeans_with, KMeansOptions};
use iris_core::Execution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn points(n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut gen = ChaCha8Rng::seed_from_u64(7);
    (0..n).map(|_| (0..d).map(|_| gen.gen_range(-50.0..50.0)).collect()).collect()
}

fn program(i: usize) -> String {
    let mut body = String::new();
    for j in 0..(i % 12 + 4) {
        body.push_str(&format!(
            "  for (int k{j} = 0; k{j} < n; k{j}++) {{\n    if (a[k{j} % 16] > {j}) a[k{j} % 16] -= {j}; else s.v += a[k{j} % 16];\n  }}\n"
        ));
    }
    format!(
        "#include <stdlib.h>\nstruct S {{ int v; }};\nstatic int a[16];\nint f{i}(int n) {{\n  struct S s = {{0}};\n  int *p = malloc(sizeof(int) * 4);\n{body}  free(p);\n  return s.v;\n}}\n"
    )
}

fn bench_kmeans(c: &mut Criterion) {
    let pts = points(2000, 4);
    let mut g = c.benchmark_group("kmeans_restarts");
    g.sample_size(20);
    for (name, exec) in MODES {
        let opts = KMeansOptions { k: 8, seed: 1, max_iter: 100, n_init: 16, exec };
        g.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, o| b.iter(|| kmeans_with(&pts, o).unwrap()));
    }
    g.finish();
}

fn bench_metrics(c: &mut Criterion) {
    let corpus: Vec<String> = (0..400).map(program).collect();
    let mut g = c.benchmark_group("static_metrics_corpus");
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| exec.map(&corpus, |s| analyze_c(s).unwrap())));
    }
    g.finish();
}

criterion_group!(benches, bench_kmeans, bench_metrics);
criterion_main!(benches);
