use criterion::{black_box, criterion_group, criterion_main, Criterion};
use num_rational::BigRational;
use primegrid::cf::{build_schedule, convergents, WPolicy};
use primegrid::grid::solve_crt_pair;
use primegrid::lattice::{build_levels, LatticeContext};
use primegrid::omega::{arrange_primes, omega_set, PermutationPolicy};
use primegrid::scan::{best_approximants, scan_enclosures};
use primegrid::state::{BuildParams, ConstructionState};
use primegrid::transcend::ln_rational;

fn bench_omega(c: &mut Criterion) {
    c.bench_function("omega_set k=500", |b| {
        b.iter(|| omega_set(black_box(500)).len())
    });
}

fn bench_crt(c: &mut Criterion) {
    let arr = arrange_primes(5, PermutationPolicy::Canonical);
    c.bench_function("solve_crt_pair k=5", |b| {
        b.iter(|| solve_crt_pair(black_box(&arr), 5).unwrap())
    });
}

fn bench_ln(c: &mut Criterion) {
    let arr = arrange_primes(4, PermutationPolicy::Canonical);
    let big = BigRational::from_integer(arr.primorial(4).unwrap().into());
    c.bench_function("ln_rational 128-bit on P_4", |b| {
        b.iter(|| ln_rational(black_box(&big), 128))
    });
}

fn bench_build(c: &mut Criterion) {
    c.bench_function("full build depth=8", |b| {
        b.iter(|| {
            ConstructionState::build(BuildParams::new(
                8,
                WPolicy::Linear { offset: 5 },
                PermutationPolicy::Canonical,
            ))
            .unwrap()
        })
    });
}

fn bench_scan_step(c: &mut Criterion) {
    let depth = 5;
    let arr = arrange_primes(depth / 2 + 1, PermutationPolicy::Canonical);
    let primorials = arr.primorials();
    let pairs: Vec<_> = (0..=depth / 2 + 1)
        .map(|k| solve_crt_pair(&arr, k).unwrap())
        .collect();
    let schedule = build_schedule(&arr, depth, WPolicy::Linear { offset: 5 }).unwrap();
    let seq = convergents(&schedule, depth);
    let ctx = LatticeContext {
        primorials: &primorials,
        pairs: &pairs,
        schedule: &schedule,
        seq: &seq,
    };
    let levels = build_levels(&ctx, depth).unwrap();
    let (alpha, eta) = scan_enclosures(&ctx, &levels).unwrap();
    c.bench_function("best_approximants one q", |b| {
        b.iter(|| best_approximants(black_box(54321), &alpha, &eta).unwrap())
    });
}

criterion_group!(
    benches,
    bench_omega,
    bench_crt,
    bench_ln,
    bench_build,
    bench_scan_step
);
criterion_main!(benches);
