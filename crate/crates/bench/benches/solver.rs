use criterion::{criterion_group, criterion_main, Criterion};
use mhd_hdg::assembly::{OseenAssembler, SolveStrategy};
use mhd_hdg::verification::{case_mesh, make_case};
use mhd_hdg::{build_unit_square_mesh, make_quadrature, oseen_iterate, solve_sparse, OseenOptions, StateVector};

fn quadrature(c: &mut Criterion) {
    c.bench_function("quadrature 3D order 12", |b| b.iter(|| make_quadrature(3, 12).unwrap()));
}

fn assembly(c: &mut Criterion) {
    let case = make_case(1).unwrap();
    let mesh = build_unit_square_mesh(8).unwrap();
    for k in [1, 2] {
        let asm = OseenAssembler::new(&mesh, k, &case.params, &case).unwrap();
        let zero = StateVector::zeros(asm.map().clone());
        c.bench_function(&format!("assemble 2D M=8 k={k}"), |b| b.iter(|| asm.assemble(&zero).unwrap()));
    }
}

fn linear_solve(c: &mut Criterion) {
    let case = make_case(1).unwrap();
    let mesh = build_unit_square_mesh(8).unwrap();
    let asm = OseenAssembler::new(&mesh, 1, &case.params, &case).unwrap();
    let system = asm.assemble(&StateVector::zeros(asm.map().clone())).unwrap();
    c.bench_function("monolithic solve 2D M=8 k=1", |b| b.iter(|| solve_sparse(&system).unwrap()));
}

fn oseen(c: &mut Criterion) {
    let mut group = c.benchmark_group("oseen example 1");
    group.sample_size(10);
    let case = make_case(1).unwrap();
    for (m, k) in [(8, 1), (16, 1), (8, 2)] {
        let mesh = case_mesh(&case, m).unwrap();
        for strategy in [SolveStrategy::Condensed, SolveStrategy::Monolithic] {
            let opts = OseenOptions { strategy, ..Default::default() };
            group.bench_function(format!("M={m} k={k} {strategy:?}"), |b| {
                b.iter(|| oseen_iterate(&mesh, k, &case.params, &case, opts).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, quadrature, assembly, linear_solve, oseen);
criterion_main!(benches);
