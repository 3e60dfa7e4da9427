//! Parallel and sequential execution of the data-parallel stages.
//!
//! The default build runs every workload on a one-thread rayon pool and on
//! the global pool. `cargo bench --no-default-features` runs the same
//! workloads through the sequential fallback.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spectral_accel::datasets::{blobs, two_moons};
use spectral_accel::graph::{build_knn_graph, default_sigma};
use spectral_accel::kmeans::{kmeans, KMeansOptions};
use spectral_accel::pipeline::{exact_spectral_clustering, SpectralOptions};
use spectral_accel::sketch::{rff_features, rff_sc_embedding};

type Workload = Box<dyn Fn() + Send + Sync>;

fn workloads() -> Vec<(&'static str, Workload)> {
    let (moons, _) = two_moons(2000, 0.08, 1).unwrap();
    let (clouds, _) = blobs(20_000, 5, 4, 4.0, 1.0, 2).unwrap();
    let sigma = default_sigma(&moons);
    let graph_input = moons.clone();
    let rff_input = moons.clone();
    vec![
        (
            "knn_graph_n2000",
            Box::new(move || {
                build_knn_graph(&graph_input, sigma, 10).unwrap();
            }),
        ),
        (
            "kmeans_n20000_k5",
            Box::new(move || {
                kmeans(
                    &clouds,
                    5,
                    None,
                    &KMeansOptions {
                        n_restarts: 2,
                        ..KMeansOptions::default()
                    },
                )
                .unwrap();
            }),
        ),
        (
            "rff_embedding_m500",
            Box::new(move || {
                rff_sc_embedding(&rff_features(&rff_input, 500, sigma, 3).unwrap(), 2).unwrap();
            }),
        ),
        (
            "exact_pipeline_n2000",
            Box::new(move || {
                let mut opts = SpectralOptions::new(2);
                opts.k_nn = 10;
                opts.n_restarts = 2;
                exact_spectral_clustering(&moons, &opts).unwrap();
            }),
        ),
    ]
}

#[cfg(feature = "parallel")]
fn bench(c: &mut Criterion) {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let all = rayon::ThreadPoolBuilder::new().build().unwrap();
    let mut group = c.benchmark_group("parallel_vs_sequential");
    group.sample_size(10);
    for (name, work) in workloads() {
        group.bench_function(BenchmarkId::new(name, "rayon_1_thread"), |b| one.install(|| b.iter(&work)));
        let label = format!("rayon_global_{}_threads", all.current_num_threads());
        group.bench_function(BenchmarkId::new(name, label), |b| all.install(|| b.iter(&work)));
    }
    group.finish();
}

#[cfg(not(feature = "parallel"))]
fn bench(c: &mut Criterion) {
    let mut group = c.benchmark_group("parallel_vs_sequential");
    group.sample_size(10);
    for (name, work) in workloads() {
        group.bench_function(BenchmarkId::new(name, "sequential_build"), |b| b.iter(&work));
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
