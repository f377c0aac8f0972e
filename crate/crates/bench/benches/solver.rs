use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use resilimat::exact_oracles::{optimal_resilient, worst_case_removal, OracleOptions};
use resilimat::lqg::{build_landing_scenario, ScenarioConfig};
use resilimat::setfn::make_coverage;
use resilimat::{solve_resilient, Matroid, SetFunction, Subset};

fn random_coverage(n: usize, universe: usize, seed: u64) -> SetFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sets = (0..n)
        .map(|_| (0..4).map(|_| rng.random_range(0..universe)).collect())
        .collect();
    make_coverage(sets).unwrap()
}

fn bench_solver(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_resilient");
    for n in [50usize, 100, 200] {
        let f = random_coverage(n, 4 * n, n as u64);
        let i = Matroid::uniform(n, n / 5);
        let iprime = Matroid::uniform(n, n / 10);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| solve_resilient(&f, &i, &iprime).unwrap())
        });
    }
    group.finish();
}

fn bench_oracles(c: &mut Criterion) {
    let f = random_coverage(10, 20, 1);
    let opts = OracleOptions::default();
    c.bench_function("optimal_resilient n=10 a=4 b=2", |b| {
        b.iter(|| optimal_resilient(&f, &Matroid::uniform(10, 4), &Matroid::uniform(10, 2), &opts).unwrap())
    });
    c.bench_function("worst_case_removal |a|=8 b=3", |b| {
        let a = Subset::from_ids(10, 0..8).unwrap();
        b.iter(|| worst_case_removal(&f, &a, &Matroid::uniform(10, 3), &opts).unwrap())
    });
}

fn bench_lqg(c: &mut Criterion) {
    let scenario = build_landing_scenario(&ScenarioConfig::new(0)).unwrap();
    let f = scenario.objective().unwrap();
    let s = Subset::from_ids(14, [0, 1, 4, 7, 9]).unwrap();
    c.bench_function("lqg objective eval (5 sensors)", |b| b.iter(|| f.evaluate(&s).unwrap()));
}

criterion_group!(benches, bench_solver, bench_oracles, bench_lqg);
criterion_main!(benches);
