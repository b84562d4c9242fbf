use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ontic::distinguish::single_shot_discrimination;
use ontic::gudder::{build_gudder, onticity_scan};
use ontic::mkc::generate_mkc;
use ontic::ontic::{sample_born_frequencies, validate_model_with, EpistemicModel, EpistemicRef};
use ontic::par::Execution;
use ontic::product::{ContextList, ProductModel};
use ontic::quantum::{random_context, PureState};
use ontic::seed::{self, stream};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn pair() -> Vec<(String, PureState)> {
    vec![
        ("psi".into(), PureState::from_real(&[1.0, 0.0, 0.0]).unwrap()),
        ("phi".into(), PureState::from_real(&[1.0, 1.0, 0.0]).unwrap()),
    ]
}

fn random_list(count: usize, s: u64) -> ContextList {
    let contexts = (0..count)
        .map(|i| {
            random_context(3, seed::derive(s, &[i as u64]))
                .unwrap()
                .relabel(format!("c{i}"))
        })
        .collect();
    ContextList::new(3, contexts).unwrap()
}

fn exact_distance(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact_tv");
    for m in [6usize, 8] {
        for (name, exec) in MODES {
            let model = ProductModel::new(random_list(m, 1), pair())
                .unwrap()
                .with_execution(exec);
            group.bench_with_input(BenchmarkId::new(name, m), &model, |b, model| {
                b.iter(|| {
                    black_box(
                        model
                            .distance(EpistemicRef::new("psi", 0), EpistemicRef::new("phi", 0))
                            .unwrap(),
                    )
                })
            });
        }
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let product = build_gudder(random_list(5, 2), pair()).unwrap();
    let model = product.materialize(6561).unwrap();
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new("discrimination", name), |b| {
            b.iter(|| {
                single_shot_discrimination(
                    exec,
                    &product,
                    EpistemicRef::new("psi", 0),
                    EpistemicRef::new("phi", 0),
                    100_000,
                    3,
                )
                .unwrap()
            })
        });
        group.bench_function(BenchmarkId::new("frequencies", name), |b| {
            b.iter(|| sample_born_frequencies(exec, &model, 20_000, 4).unwrap())
        });
    }
    group.finish();
}

fn validation(c: &mut Criterion) {
    let model = build_gudder(random_list(6, 5), pair())
        .unwrap()
        .materialize(6561)
        .unwrap();
    let mut group = c.benchmark_group("validate_model");
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| validate_model_with(exec, &model, 1e-10).unwrap())
        });
    }
    group.finish();
}

fn grid_scans(c: &mut Criterion) {
    let states: Vec<(String, PureState)> = (0..3)
        .map(|i| {
            (
                format!("s{i}"),
                PureState::random(3, &mut seed::rng(10 + i)).unwrap(),
            )
        })
        .collect();
    let targets: Vec<_> = (0..16)
        .map(|i| random_context(3, seed::derive(6, &[stream::CONTEXTS, i])).unwrap())
        .collect();
    let set = generate_mkc(&targets, 0.05, 1e-6, 6, 200).unwrap();
    let mut group = c.benchmark_group("grid_scan");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new("onticity_scan", name), |b| {
            b.iter(|| {
                let mut list = ContextList::empty(3).unwrap();
                onticity_scan(exec, &states, &[1, 2, 3, 4], &mut list, 7).unwrap()
            })
        });
        group.bench_function(BenchmarkId::new("incompatibility_scan", name), |b| {
            b.iter(|| set.incompatibility_scan(exec))
        });
    }
    group.finish();
}

criterion_group!(benches, exact_distance, monte_carlo, validation, grid_scans);
criterion_main!(benches);
