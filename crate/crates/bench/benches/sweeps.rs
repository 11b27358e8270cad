use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use tbs_bench::tuning_inputs;
use tbs_core::circuits::{build_sagnac, build_tbs};
use tbs_core::sweeps::{
    reference_imperfections, sweep_tomography, tuning_intensities, Grid, TomographyDevice,
};
use tbs_core::{ModeSpace, SagnacConfig, TbsConfig};

fn builders(c: &mut Criterion) {
    let space = Arc::new(ModeSpace::tbs(4));
    let ideal = TbsConfig::default();
    let imperfect = TbsConfig {
        imp: reference_imperfections(),
        ..TbsConfig::default()
    };
    c.bench_function("build_tbs/ideal/L4", |b| {
        b.iter(|| build_tbs(black_box(&ideal), &space).unwrap())
    });
    c.bench_function("build_tbs/imperfect/L4", |b| {
        b.iter(|| build_tbs(black_box(&imperfect), &space).unwrap())
    });
    let sagnac = SagnacConfig::default();
    c.bench_function("build_sagnac/L4", |b| {
        b.iter(|| build_sagnac(black_box(&sagnac), &space).unwrap())
    });
}

fn sweeps(c: &mut Criterion) {
    let space = Arc::new(ModeSpace::tbs(4));
    let inputs = tuning_inputs(&space, 1, 100);
    let grid = Grid::new(0.0, 180.0, 1.0).unwrap();
    let mut group = c.benchmark_group("sweeps");
    group.sample_size(10);
    group.bench_function("tuning/181x102/L4", |b| {
        b.iter(|| {
            tuning_intensities(&space, &grid, &TbsConfig::default(), black_box(&inputs)).unwrap()
        })
    });
    let tbs = TbsConfig::with_theta2(0.0);
    group.bench_function("tomography/tbs/xt25/L4", |b| {
        b.iter(|| sweep_tomography(&space, TomographyDevice::Tbs, &tbs, black_box(25.0)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, builders, sweeps);
criterion_main!(benches);
