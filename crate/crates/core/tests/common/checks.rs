//! Measurements shared by the property suites and the acceptance run. Each
//! sweep returns the worst scaled deviation it saw.

use std::sync::Arc;

use mhd_hdg::assembly::{build_dofmap_with_gauge, OseenAssembler, StateVector};
use mhd_hdg::basis::{
    l2_project_element, l2_project_facet, make_quadrature, monomial_exponents, monomial_integral, rt_project,
    PhysicalBasis,
};
use mhd_hdg::forms::{ElementContext, Field, Form, LocalBlocks, Physics, ReferenceData, ZeroData};
use mhd_hdg::mesh::{build_unit_cube_mesh, build_unit_square_mesh, Point, SimplicialMesh};
use mhd_hdg::{solve_sparse, DofMap, Error, PhysicalParameters};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};

pub fn unit_mesh(dim: usize, m: usize) -> SimplicialMesh {
    if dim == 2 {
        build_unit_square_mesh(m).unwrap()
    } else {
        build_unit_cube_mesh(m).unwrap()
    }
}

/// Integral of `f` over element `e` with a rule of the given order.
pub fn integrate(mesh: &SimplicialMesh, e: usize, order: usize, f: impl Fn(&Point) -> f64) -> f64 {
    let rule = make_quadrature(mesh.dim(), order).unwrap();
    let map = mesh.affine_map(e);
    rule.integrate(|xi| f(&map.apply(xi))) * map.det.abs()
}

/// Smooth field with a closed-form divergence: `v_c = sin(a_c . x + b_c)`.
#[derive(Debug, Clone)]
pub struct Wave {
    pub a: [[f64; 3]; 3],
    pub b: [f64; 3],
}

impl Wave {
    pub fn random(rng: &mut impl Rng) -> Self {
        Wave {
            a: std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-3.0..3.0))),
            b: std::array::from_fn(|_| rng.gen_range(-1.0..1.0)),
        }
    }

    pub fn eval(&self, x: &Point) -> [f64; 3] {
        std::array::from_fn(|c| (self.a[c][0] * x[0] + self.a[c][1] * x[1] + self.a[c][2] * x[2] + self.b[c]).sin())
    }

    pub fn div(&self, dim: usize, x: &Point) -> f64 {
        (0..dim)
            .map(|c| self.a[c][c] * (self.a[c][0] * x[0] + self.a[c][1] * x[1] + self.a[c][2] * x[2] + self.b[c]).cos())
            .sum()
    }
}

/// Largest relative error of the rules on reference-simplex monomials.
pub fn quadrature_sweep(dims: &[usize], orders: std::ops::RangeInclusive<usize>) -> f64 {
    let mut worst: f64 = 0.0;
    for &dim in dims {
        for order in orders.clone() {
            let rule = make_quadrature(dim, order).unwrap();
            if rule.weights.iter().any(|w| *w <= 0.0) {
                return f64::INFINITY;
            }
            for e in monomial_exponents(dim, order) {
                let got = rule.integrate(|x| (0..dim).map(|c| x[c].powi(e[c] as i32)).product());
                let exact = monomial_integral(dim, &e[..dim]);
                worst = worst.max(((got - exact) / exact).abs());
            }
        }
    }
    worst
}

/// `(div Pi v - div v, q)` against every test function of degree `degree`,
/// relative to `max(|(div v, q)|, 1)`.
pub fn rt_commuting_defect(
    mesh: &SimplicialMesh,
    degree: usize,
    v: impl Fn(&Point) -> [f64; 3],
    div: impl Fn(&Point) -> f64,
) -> f64 {
    let order = 2 * degree + 14;
    let p = rt_project(mesh, 0, degree, order, v).unwrap();
    let test = PhysicalBasis::new(mesh, 0, degree).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..test.size() {
        let lhs = integrate(mesh, 0, order, |x| p.div(x) * test.eval(x)[i]);
        let rhs = integrate(mesh, 0, order, |x| div(x) * test.eval(x)[i]);
        worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1.0));
    }
    worst
}

/// Random shape-regular element: `None` when the draw is too flat.
pub fn random_simplex(dim: usize, rng: &mut impl Rng) -> Option<SimplicialMesh> {
    let p: Vec<f64> = (0..12).map(|_| rng.gen_range(-0.3..0.3)).collect();
    let scale = rng.gen_range(0.05..2.0);
    let shift = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    super::perturbed_simplex(dim, &p, scale, shift)
}

/// Commuting defect on `count` random elements of each dimension, degrees
/// 0..=2, for random polynomial fields of degree 4 that every rule involved
/// integrates exactly.
pub fn rt_commuting_sweep(count: usize, seed: u64) -> f64 {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for dim in [2, 3] {
        let mut done = 0;
        while done < count {
            let Some(mesh) = random_simplex(dim, &mut rng) else { continue };
            let comps: Vec<Poly> = (0..dim)
                .map(|_| poly(dim, 4, &(0..35).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>()))
                .collect();
            let v = |x: &Point| std::array::from_fn(|c| if c < dim { comps[c].eval(x) } else { 0.0 });
            let div = |x: &Point| (0..dim).map(|c| comps[c].grad(x)[c]).sum();
            worst = worst.max(rt_commuting_defect(&mesh, done % 3, v, div));
            done += 1;
        }
    }
    worst
}

/// Re-projecting element polynomials and RT projections must reproduce them.
pub fn projection_idempotence_sweep(count: usize, seed: u64) -> f64 {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < count {
        let dim = 2 + done % 2;
        let Some(mesh) = random_simplex(dim, &mut rng) else { continue };
        let degree = done % 4;
        let basis = PhysicalBasis::new(&mesh, 0, degree).unwrap();
        let coeffs: Vec<f64> = (0..basis.size()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let again = l2_project_element(&mesh, 0, degree, 2 * degree + 2, |x| basis.evaluate(&coeffs, x)).unwrap();
        for (a, b) in again.iter().zip(&coeffs) {
            worst = worst.max((a - b).abs());
        }
        let v = Wave::random(&mut rng);
        let rt_degree = done % 3;
        let first = rt_project(&mesh, 0, rt_degree, 2 * rt_degree + 12, |x| v.eval(x)).unwrap();
        let second = rt_project(&mesh, 0, rt_degree, 2 * rt_degree + 4, |x| first.eval(x)).unwrap();
        for (a, b) in first.coeffs.iter().zip(&second.coeffs) {
            worst = worst.max((a - b).abs() / a.abs().max(1.0));
        }
        done += 1;
    }
    worst
}

/// Random state with essential boundary unknowns set to zero.
pub fn random_state(map: &Arc<DofMap>, rng: &mut impl Rng) -> StateVector {
    let values = (0..map.total).map(|i| if map.fixed[i] { 0.0 } else { rng.gen_range(-1.0..1.0) }).collect();
    StateVector::new(map.clone(), values).unwrap()
}

/// `sum_K v^T C_K v` over the blocks of `form`, with the sum of absolute
/// contributions as a scale.
pub fn quadratic_form(mesh: &SimplicialMesh, map: &DofMap, blocks: &[LocalBlocks], form: Form, v: &[f64]) -> (f64, f64) {
    let (mut value, mut scale) = (0.0, 0.0);
    for (e, b) in blocks.iter().enumerate() {
        for entry in b.entries.iter().filter(|x| x.form == form) {
            let rows = map.field_range(mesh, e, entry.row);
            let cols = map.field_range(mesh, e, entry.col);
            for (a, gr) in rows.enumerate() {
                for (c, gc) in cols.clone().enumerate() {
                    let t = v[gr] * entry.matrix[(a, c)] * v[gc];
                    value += t;
                    scale += t.abs();
                }
            }
        }
    }
    (value, scale)
}

/// `|c(phi; v, v)| / scale` for both convection forms on ten random fields.
pub fn skew_sweep(seed: u64) -> f64 {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let cases = [(2, 3, 1), (2, 3, 2), (2, 2, 3), (3, 2, 1), (3, 1, 2)];
    let mut worst: f64 = 0.0;
    for round in 0..2 {
        for &(dim, m, k) in &cases {
            let mesh = unit_mesh(dim, m);
            let mut params = PhysicalParameters::unit(dim);
            params.n = 0.5 + round as f64;
            let asm = OseenAssembler::new(&mesh, k, &params, &ZeroData).unwrap();
            let map = asm.map().clone();
            let phi = random_state(&map, &mut rng);
            let v = random_state(&map, &mut rng);
            let blocks: Vec<LocalBlocks> =
                (0..mesh.num_elements()).map(|e| asm.convection_blocks(e, &phi).unwrap()).collect();
            for form in [Form::Convection, Form::ThermalConvection] {
                let (value, scale) = quadratic_form(&mesh, &map, &blocks, form, &v.values);
                if scale <= 0.0 {
                    return f64::INFINITY;
                }
                worst = worst.max(value.abs() / scale);
            }
        }
    }
    worst
}

/// Coefficients of a scalar function on element `e` and on each of its facets.
pub fn interpolate(mesh: &SimplicialMesh, e: usize, k: usize, f: impl Fn(&Point) -> f64 + Copy) -> (Vec<f64>, Vec<Vec<f64>>) {
    let inner = l2_project_element(mesh, e, k, 2 * k + 2, f).unwrap();
    let traces = mesh.element_facets(e).iter().map(|&fc| l2_project_facet(mesh, fc, k, 2 * k + 2, f).unwrap()).collect();
    (inner, traces)
}

pub fn block(b: &LocalBlocks, row: Field, col: Field) -> DMatrix<f64> {
    b.block(row, col).unwrap_or_else(|| b.zeros(row, col))
}

/// Solves the flux rows of one element for given primal data.
pub fn recover(b: &LocalBlocks, flux: Field, primal: Field, hat: fn(usize) -> Field, u: &[f64], hats: &[Vec<f64>]) -> DVector<f64> {
    let mut rhs = -(block(b, flux, primal) * DVector::from_column_slice(u));
    for (l, h) in hats.iter().enumerate() {
        rhs -= block(b, flux, hat(l)) * DVector::from_column_slice(h);
    }
    block(b, flux, flux).lu().solve(&rhs).unwrap()
}

/// Polynomial given by monomial terms.
#[derive(Debug, Clone)]
pub struct Poly {
    pub terms: Vec<(f64, [usize; 3])>,
}

impl Poly {
    pub fn eval(&self, x: &Point) -> f64 {
        self.terms.iter().map(|(c, e)| c * x[0].powi(e[0] as i32) * x[1].powi(e[1] as i32) * x[2].powi(e[2] as i32)).sum()
    }

    pub fn grad(&self, x: &Point) -> [f64; 3] {
        let mut g = [0.0; 3];
        for (c, e) in &self.terms {
            for d in 0..3 {
                if e[d] == 0 {
                    continue;
                }
                let mut t = c * e[d] as f64;
                for j in 0..3 {
                    let p = if j == d { e[j] - 1 } else { e[j] };
                    t *= x[j].powi(p as i32);
                }
                g[d] += t;
            }
        }
        g
    }
}

/// Polynomial of total degree `k` in `dim` variables with the given coefficients.
pub fn poly(dim: usize, k: usize, coefs: &[f64]) -> Poly {
    let exps = monomial_exponents(dim, k);
    Poly { terms: exps.into_iter().zip(coefs.iter().copied()).map(|(e, c)| (c, e)).collect() }
}

/// Recovered velocity flux and the exact gradient at interior sample points
/// of element `e` of the M=2 mesh, for velocity components of degree `k`.
pub fn flux_case(dim: usize, k: usize, e: usize, ha: f64, coefs: &[f64]) -> (Vec<f64>, Vec<[[f64; 3]; 3]>) {
    let mesh = unit_mesh(dim, 2);
    let e = e % mesh.num_elements();
    let reference = ReferenceData::bilinear(dim, k).unwrap();
    let ctx = ElementContext::new(&mesh, e, &reference).unwrap();
    let mut params = PhysicalParameters::unit(dim);
    params.ha = ha;
    let comps: Vec<Poly> = (0..dim).map(|c| poly(dim, k, &coefs[c * 20..])).collect();
    let mut u = Vec::new();
    let mut hats = vec![Vec::new(); dim + 1];
    for p in &comps {
        let (inner, traces) = interpolate(&mesh, e, k, |x| p.eval(x));
        u.extend(inner);
        for (h, t) in hats.iter_mut().zip(traces) {
            h.push(t);
        }
    }
    // Trace storage is component-major within each facet.
    let hats: Vec<Vec<f64>> = hats.into_iter().map(|c| c.concat()).collect();
    let b = mhd_hdg::forms::local_mixed_flux_block(Physics::Velocity, &ctx, &params);
    let l = recover(&b, Field::L, Field::U, Field::UHat, &u, &hats);
    let basis = PhysicalBasis::new(&mesh, e, k - 1).unwrap();
    let n1 = basis.size();
    let c = mesh.centroid(e);
    let verts: Vec<Point> = mesh.element(e).iter().map(|&v| *mesh.vertex(v)).collect();
    let mut got = Vec::new();
    let mut want = Vec::new();
    for v in &verts {
        let x: Point = std::array::from_fn(|i| 0.7 * v[i] + 0.3 * c[i]);
        let mut g = [[0.0; 3]; 3];
        for i in 0..dim {
            let gi = comps[i].grad(&x);
            for j in 0..dim {
                let r0 = (i * dim + j) * n1;
                got.push(basis.evaluate(&l.as_slice()[r0..r0 + n1], &x));
                g[i][j] = gi[j];
            }
        }
        want.push(g);
    }
    (got, want)
}

/// `|L_h - grad u / Ha^2|` relative to `max(|grad u / Ha^2|, 1)` over random
/// polynomial velocities.
pub fn flux_recovery_sweep(count: usize, seed: u64) -> f64 {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for i in 0..count {
        let (dim, k) = (2 + i % 2, 1 + (i / 2) % 2);
        let ha = rng.gen_range(0.3..5.0);
        let coefs: Vec<f64> = (0..60).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let (got, want) = flux_case(dim, k, rng.gen_range(0..48), ha, &coefs);
        let mut idx = 0;
        for g in &want {
            for row in g.iter().take(dim) {
                for gij in row.iter().take(dim) {
                    let exact = gij / (ha * ha);
                    worst = worst.max((got[idx] - exact).abs() / exact.abs().max(1.0));
                    idx += 1;
                }
            }
        }
    }
    worst
}

/// Whether the solver reports a singular system once the pressure gauge row
/// is left out.
pub fn singular_without_gauge(k: usize) -> bool {
    let mesh = build_unit_square_mesh(2).unwrap();
    let params = PhysicalParameters::unit(2);
    let map = Arc::new(build_dofmap_with_gauge(&mesh, k, false).unwrap());
    let asm = OseenAssembler::with_map(&mesh, map.clone(), &params, &ZeroData).unwrap();
    let system = asm.assemble(&StateVector::zeros(map)).unwrap();
    matches!(solve_sparse(&system), Err(Error::SingularSystem(_)))
}
