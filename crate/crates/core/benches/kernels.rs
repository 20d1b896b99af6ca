//! Block kernels. Run once per build (`cargo bench` and
//! `cargo bench --no-default-features`); ids carry the execution mode so the
//! two reports sit side by side. Parallel builds also time each kernel on a
//! single-thread rayon pool.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sfd_core::bench::{residual_energy, SyntheticSpec};
use sfd_core::linalg::{gaussian_matrix, svd_top, SketchRng};
use sfd_core::randsvd::PowerConfig;
use sfd_core::shrink::{dense_shrink, sparse_shrink};
use sfd_core::{execution_mode, SparseBuffer};

const ELL: usize = 50;

fn buffer() -> SparseBuffer {
    SyntheticSpec::new(1000, 1000, 50, 7).generate().unwrap()
}

#[cfg(feature = "parallel")]
type Pool = rayon::ThreadPool;
#[cfg(not(feature = "parallel"))]
type Pool = ();

/// Runs `f` on `pool` when given, otherwise on the default scheduler.
fn on<R: Send>(pool: Option<&Pool>, f: impl FnOnce() -> R + Send) -> R {
    match pool {
        #[cfg(feature = "parallel")]
        Some(p) => p.install(f),
        _ => f(),
    }
}

fn kernels(c: &mut Criterion, label: &str, pool: Option<&Pool>) {
    let a = buffer();
    let mut rng = SketchRng::new(1);
    let xt = gaussian_matrix(ELL, a.cols(), &mut rng);
    let yt = gaussian_matrix(ELL, a.rows(), &mut rng);
    let dense = gaussian_matrix(2 * ELL, a.cols(), &mut rng);
    let cfg = PowerConfig::fast();

    let mut g = c.benchmark_group("kernels");
    g.sample_size(20);
    g.bench_function(BenchmarkId::new("mul_block", label), |b| {
        b.iter(|| on(pool, || a.mul_block(&xt).unwrap()))
    });
    g.bench_function(BenchmarkId::new("tmul_block", label), |b| {
        b.iter(|| on(pool, || a.tmul_block(&yt).unwrap()))
    });
    g.bench_function(BenchmarkId::new("svd_top", label), |b| {
        b.iter(|| on(pool, || svd_top(&dense, ELL).unwrap()))
    });
    g.bench_function(BenchmarkId::new("dense_shrink", label), |b| {
        b.iter(|| on(pool, || dense_shrink(&dense, ELL).unwrap()))
    });
    g.bench_function(BenchmarkId::new("sparse_shrink", label), |b| {
        b.iter(|| {
            on(pool, || {
                sparse_shrink(&a, ELL, &cfg, &mut SketchRng::new(3)).unwrap()
            })
        })
    });
    let sketch = dense_shrink(&dense, ELL).unwrap();
    g.bench_function(BenchmarkId::new("residual_energy", label), |b| {
        b.iter(|| on(pool, || residual_energy(&a, &sketch, 10).unwrap()))
    });
    g.finish();
}

fn by_mode(c: &mut Criterion) {
    kernels(c, execution_mode(), None);
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        kernels(c, "parallel-1-thread", Some(&pool));
    }
}

criterion_group!(benches, by_mode);
criterion_main!(benches);
