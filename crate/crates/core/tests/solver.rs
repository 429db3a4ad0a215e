use std::sync::Arc;

use mhd_hdg::assembly::{
    assemble_oseen, build_dofmap, build_dofmap_with_gauge, max_divergence, oseen_iterate, solve_sparse,
    DivergenceField, OseenAssembler, OseenOptions, SolveStrategy, StateVector,
};
use mhd_hdg::basis::{l2_project_element, make_quadrature, PhysicalBasis};
use mhd_hdg::forms::{Field, ZeroData};
use mhd_hdg::mesh::{build_unit_square_mesh, Point};
use mhd_hdg::{make_case, Error, PhysicalParameters};
use rand::{Rng, SeedableRng};

#[test]
fn velocity_flux_block_is_scaled_mass_matrix() {
    let mesh = build_unit_square_mesh(1).unwrap();
    let mut params = PhysicalParameters::unit(2);
    params.ha = 1.7;
    let k = 2;
    let map = Arc::new(build_dofmap(&mesh, k).unwrap());
    let system = assemble_oseen(&mesh, k, &params, &StateVector::zeros(map.clone()), &ZeroData).unwrap();
    let rule = make_quadrature(2, 2 * k).unwrap();
    for e in 0..mesh.num_elements() {
        // Dense mass matrix of the P_{k-1} basis by direct quadrature.
        let basis = PhysicalBasis::new(&mesh, e, k - 1).unwrap();
        let n1 = basis.size();
        let det = basis.map.det.abs();
        let mut mass = vec![0.0; n1 * n1];
        for (xi, w) in rule.points.iter().zip(&rule.weights) {
            let phi = basis.eval_ref(xi);
            for a in 0..n1 {
                for b in 0..n1 {
                    mass[a * n1 + b] += w * det * phi[a] * phi[b];
                }
            }
        }
        let range = map.interior_range(e, Field::L);
        for (i, gi) in range.clone().enumerate() {
            for (j, gj) in range.clone().enumerate() {
                let expected = if i / n1 == j / n1 { params.ha * params.ha * mass[(i % n1) * n1 + j % n1] } else { 0.0 };
                assert!((system.entry(gi, gj) - expected).abs() <= 1e-12, "({i},{j})");
            }
        }
    }
}

#[test]
fn pressure_coupling_blocks_are_transposes() {
    let mesh = build_unit_square_mesh(2).unwrap();
    let params = PhysicalParameters::unit(2);
    let map = Arc::new(build_dofmap(&mesh, 2).unwrap());
    let system = assemble_oseen(&mesh, 2, &params, &StateVector::zeros(map.clone()), &ZeroData).unwrap();
    let mut checked = 0;
    for e in 0..mesh.num_elements() {
        for i in map.interior_range(e, Field::U) {
            for j in map.interior_range(e, Field::P) {
                let (up, pu) = (system.entry(i, j), system.entry(j, i));
                // b_1h appears with opposite signs in the momentum and
                // continuity rows.
                assert!((up + pu).abs() <= 1e-14, "({i},{j}): {up} vs {pu}");
                checked += (up != 0.0) as usize;
            }
        }
    }
    assert!(checked > 0);
}

#[test]
fn assembled_system_round_trip() {
    let mesh = build_unit_square_mesh(2).unwrap();
    let params = PhysicalParameters::unit(2);
    let map = Arc::new(build_dofmap(&mesh, 1).unwrap());
    let system = assemble_oseen(&mesh, 1, &params, &StateVector::zeros(map.clone()), &ZeroData).unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    let x: Vec<f64> = (0..system.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut manufactured = system.clone();
    manufactured.rhs = system.apply(&x);
    let sol = solve_sparse(&manufactured).unwrap();
    assert!(sol.relative_residual <= 1e-10);
    for (a, b) in sol.x.iter().zip(&x) {
        assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
    }
}

#[test]
fn missing_pressure_gauge_is_reported_as_singular() {
    let mesh = build_unit_square_mesh(2).unwrap();
    let params = PhysicalParameters::unit(2);
    let map = Arc::new(build_dofmap_with_gauge(&mesh, 1, false).unwrap());
    let asm = OseenAssembler::with_map(&mesh, map.clone(), &params, &ZeroData).unwrap();
    let system = asm.assemble(&StateVector::zeros(map)).unwrap();
    assert!(matches!(solve_sparse(&system), Err(Error::SingularSystem(_))));
}

#[test]
fn iteration_logs_are_reproducible() {
    let mesh = build_unit_square_mesh(4).unwrap();
    let case = make_case(1).unwrap();
    let run = || oseen_iterate(&mesh, 1, &case.params, &case, OseenOptions::default()).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.log.len(), b.log.len());
    for (x, y) in a.log.iter().zip(&b.log) {
        assert_eq!(x.difference.to_bits(), y.difference.to_bits());
        assert_eq!(x.residual.to_bits(), y.residual.to_bits());
    }
    assert!(a.state.values.iter().zip(&b.state.values).all(|(x, y)| x.to_bits() == y.to_bits()));
    let last = a.log.last().unwrap();
    assert!(a.log.iter().all(|r| r.difference.is_finite()));
    assert!(last.difference < 1e-8);
}

#[test]
fn converged_example_one_is_divergence_free() {
    let mesh = build_unit_square_mesh(4).unwrap();
    let case = make_case(1).unwrap();
    for strategy in [SolveStrategy::Condensed, SolveStrategy::Monolithic] {
        let opts = OseenOptions { strategy, ..Default::default() };
        let res = oseen_iterate(&mesh, 1, &case.params, &case, opts).unwrap();
        for field in [DivergenceField::Velocity, DivergenceField::Magnetic] {
            let d = max_divergence(&res.state, field, &mesh).unwrap();
            assert!(d.max() <= 1e-12, "{strategy:?} {field:?}: {d:?}");
        }
    }
}

#[test]
fn divergence_of_interpolated_fields() {
    let mesh = build_unit_square_mesh(3).unwrap();
    let k = 1;
    let map = Arc::new(build_dofmap(&mesh, k).unwrap());
    let fill = |f: &dyn Fn(&Point) -> [f64; 3]| {
        let mut state = StateVector::zeros(map.clone());
        for e in 0..mesh.num_elements() {
            let coeffs: Vec<f64> =
                (0..2).flat_map(|c| l2_project_element(&mesh, e, k, 4, |x| f(x)[c]).unwrap()).collect();
            state.interior_mut(e, Field::U).copy_from_slice(&coeffs);
        }
        state
    };
    let solenoidal = fill(&|x| [x[1], x[0], 0.0]);
    let d = max_divergence(&solenoidal, DivergenceField::Velocity, &mesh).unwrap();
    assert!(d.max() <= 1e-13, "{d:?}");

    let mut rng = rand::rngs::StdRng::seed_from_u64(5);
    let values = (0..map.total).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let random = StateVector::new(map.clone(), values).unwrap();
    let d = max_divergence(&random, DivergenceField::Velocity, &mesh).unwrap();
    assert!(d.element > 1e-3 && d.jump > 1e-3, "{d:?}");
}

#[test]
fn essential_traces_are_zero_after_a_solve() {
    let mesh = build_unit_square_mesh(3).unwrap();
    let case = make_case(1).unwrap();
    let res = oseen_iterate(&mesh, 1, &case.params, &case, OseenOptions::default()).unwrap();
    let map = &res.state.map;
    for (i, fixed) in map.fixed.iter().enumerate() {
        if *fixed {
            assert_eq!(res.state.values[i], 0.0);
        }
    }
}

#[test]
fn invalid_options_are_rejected() {
    let mesh = build_unit_square_mesh(1).unwrap();
    let params = PhysicalParameters::unit(2);
    let bad_tol = OseenOptions { tol: 0.0, ..Default::default() };
    assert!(matches!(oseen_iterate(&mesh, 1, &params, &ZeroData, bad_tol), Err(Error::InvalidArgument(_))));
    assert!(matches!(build_dofmap(&mesh, 0), Err(Error::InvalidArgument(_))));
}

#[test]
fn iteration_limit_reports_non_convergence_with_log() {
    let mesh = build_unit_square_mesh(4).unwrap();
    let case = make_case(1).unwrap();
    let opts = OseenOptions { max_iter: 1, ..Default::default() };
    match oseen_iterate(&mesh, 1, &case.params, &case, opts) {
        Err(Error::NonConvergence { iterations, log, .. }) => {
            assert_eq!(iterations, 1);
            assert_eq!(log.len(), 1);
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}
