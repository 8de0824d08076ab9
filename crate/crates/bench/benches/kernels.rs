use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use liestat::matfun::{mat_exp, mat_log};
use liestat::{differential_coords, group_mean, GroupDescriptor, MeanOptions, TwoSampleFit};
use liestat_bench::{cloud, deformed, matrix, sphere};

fn matrix_functions(c: &mut Criterion) {
    for n in [3, 6] {
        let a = matrix(n, 0.8, n as u64);
        let g = mat_exp(&a).unwrap();
        c.bench_function(&format!("mat_exp {n}x{n}"), |b| b.iter(|| mat_exp(black_box(&a)).unwrap()));
        c.bench_function(&format!("mat_log {n}x{n}"), |b| b.iter(|| mat_log(black_box(&g)).unwrap()));
    }
}

fn means_and_fits(c: &mut Criterion) {
    let opts = MeanOptions::default();
    for (name, desc, m) in [
        ("se3", GroupDescriptor::SE3, 58),
        ("glplus3", GroupDescriptor::GLPlus(3), 30),
        ("glplus3^20", GroupDescriptor::power(GroupDescriptor::GLPlus(3), 20).unwrap(), 15),
    ] {
        let a = cloud(&desc, 0.1, m, 1);
        let b = cloud(&desc, 0.1, m, 2);
        c.bench_function(&format!("group_mean {name} m={m}"), |bn| {
            bn.iter(|| group_mean(black_box(&a), &opts).unwrap())
        });
        c.bench_function(&format!("two-sample fit {name} m=n={m}"), |bn| {
            bn.iter(|| TwoSampleFit::new(black_box(&a), black_box(&b), &opts).unwrap())
        });
        // the product group has more dimensions than samples
        if desc.dim() < m {
            let fit = TwoSampleFit::new(&a, &b, &opts).unwrap();
            c.bench_function(&format!("t2 and bhattacharyya from fit {name}"), |bn| {
                bn.iter(|| (black_box(&fit).t2().unwrap(), fit.bhattacharyya().unwrap()))
            });
        }
    }
}

fn shapes(c: &mut Criterion) {
    let reference = sphere(24, 48);
    let target = deformed(&reference, 0.05, 3);
    let faces = reference.faces().len();
    c.bench_function(&format!("differential_coords {faces} faces"), |b| {
        b.iter(|| differential_coords(black_box(&reference), black_box(&target)).unwrap())
    });
}

criterion_group!(benches, matrix_functions, means_and_fits, shapes);
criterion_main!(benches);
