use criterion::{criterion_group, criterion_main, Criterion};
use pslab::circle::{build_preset, diagonal_count, main_term_and_xi, preset, r_direct};
use pslab::{default_kernel, find_solutions, CircleOptions, PSContext, SearchMode, SearchTask};

fn kernel(c: &mut Criterion) {
    let mut g = c.benchmark_group("kernel");
    g.sample_size(10);
    g.bench_function("default_kernel", |b| b.iter(|| default_kernel().unwrap()));
    let k = default_kernel().unwrap();
    g.bench_function("k_hat", |b| b.iter(|| (0..1000).map(|i| k.k_hat(i as f64 * 0.01)).sum::<f64>()));
    g.finish();
}

fn circle(c: &mut Criterion) {
    let k = default_kernel().unwrap();
    let p = preset("desk-small").unwrap();
    let (cfg, cx) = build_preset(&p, &k, &CircleOptions::default()).unwrap();
    let mut g = c.benchmark_group("circle desk-small");
    g.sample_size(10);
    g.bench_function("r_direct", |b| b.iter(|| r_direct(&cfg, &cx, &k).unwrap()));
    g.bench_function("diagonal_count", |b| b.iter(|| diagonal_count(&cfg, &cx).unwrap()));
    g.bench_function("main_term_and_xi", |b| b.iter(|| main_term_and_xi(&cfg, &cx, &k).unwrap()));
    g.finish();
}

fn solver(c: &mut Criterion) {
    let cx = PSContext::new(0.95, 1.2).unwrap();
    let mut g = c.benchmark_group("find_solutions");
    g.sample_size(10);
    for (n, s) in [(1e4, 3), (1e4, 4)] {
        let task = SearchTask::new(n, s, 0.1, &cx).with_mode(SearchMode::Count);
        g.bench_function(format!("N {n} s {s}"), |b| b.iter(|| find_solutions(&task, &cx).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, kernel, circle, solver);
criterion_main!(benches);
