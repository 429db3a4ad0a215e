//! Raviart–Thomas space `RT_s(K) = [P_s]^d + x P_s` and the canonical
//! moment-based projection onto it.

use nalgebra::{DMatrix, DVector};

use super::{binomial, make_basis, make_quadrature, monomial_exponents, PhysicalBasis};
use crate::error::{Error, Result};
use crate::mesh::{Point, SimplicialMesh};

use super::projection::FacetPatch;

/// `d * C(s+d, d) + C(s+d-1, d-1)`.
pub fn rt_dimension(dim: usize, degree: usize) -> usize {
    dim * binomial(degree + dim, dim) + binomial(degree + dim - 1, dim - 1)
}

/// RT space on one physical element.
///
/// The first `d * dim P_s` functions are `phi_i e_c` (component-major) with
/// `phi_i` the orthonormal element basis. The remaining ones are
/// `y m(y)` with `y = (x - c) / h` and `m` running over homogeneous
/// monomials of degree `s`.
#[derive(Debug, Clone)]
pub struct RtSpace {
    pub dim: usize,
    pub degree: usize,
    scalar: PhysicalBasis,
    center: Point,
    h: f64,
    homogeneous: Vec<[usize; 3]>,
}

impl RtSpace {
    pub fn new(mesh: &SimplicialMesh, element: usize, degree: usize) -> Result<Self> {
        let scalar = PhysicalBasis::new(mesh, element, degree)?;
        let geo = mesh.element_geometry(element)?;
        let dim = mesh.dim();
        let homogeneous = monomial_exponents(dim, degree)
            .into_iter()
            .filter(|e| e.iter().sum::<usize>() == degree)
            .collect();
        Ok(Self { dim, degree, scalar, center: mesh.centroid(element), h: geo.diameter, homogeneous })
    }

    pub fn size(&self) -> usize {
        self.dim * self.scalar.size() + self.homogeneous.len()
    }

    fn scaled(&self, x: &Point) -> Point {
        let mut y = [0.0; 3];
        for c in 0..self.dim {
            y[c] = (x[c] - self.center[c]) / self.h;
        }
        y
    }

    fn monomial(&self, e: &[usize; 3], y: &Point) -> f64 {
        (0..self.dim).map(|c| y[c].powi(e[c] as i32)).product()
    }

    /// Values of every basis function at `x`.
    pub fn eval(&self, x: &Point) -> Vec<[f64; 3]> {
        let phi = self.scalar.eval(x);
        let n = phi.len();
        let mut out = vec![[0.0; 3]; self.size()];
        for c in 0..self.dim {
            for (i, p) in phi.iter().enumerate() {
                out[c * n + i][c] = *p;
            }
        }
        let y = self.scaled(x);
        for (j, e) in self.homogeneous.iter().enumerate() {
            let m = self.monomial(e, &y);
            for c in 0..self.dim {
                out[self.dim * n + j][c] = y[c] * m;
            }
        }
        out
    }

    /// Divergence of every basis function at `x`.
    pub fn div(&self, x: &Point) -> Vec<f64> {
        let grads = self.scalar.grad(x);
        let n = grads.len();
        let mut out = vec![0.0; self.size()];
        for c in 0..self.dim {
            for (i, g) in grads.iter().enumerate() {
                out[c * n + i] = g[c];
            }
        }
        let y = self.scaled(x);
        let factor = (self.dim + self.degree) as f64 / self.h;
        for (j, e) in self.homogeneous.iter().enumerate() {
            out[self.dim * n + j] = factor * self.monomial(e, &y);
        }
        out
    }

    /// Number of leading functions spanning `[P_s]^d`.
    pub fn polynomial_part(&self) -> usize {
        self.dim * self.scalar.size()
    }
}

/// A member of an [`RtSpace`] given by its coefficients.
#[derive(Debug, Clone)]
pub struct RtFunction {
    pub space: RtSpace,
    pub coeffs: Vec<f64>,
}

impl RtFunction {
    pub fn eval(&self, x: &Point) -> [f64; 3] {
        let mut v = [0.0; 3];
        for (b, c) in self.space.eval(x).iter().zip(&self.coeffs) {
            for d in 0..3 {
                v[d] += c * b[d];
            }
        }
        v
    }

    pub fn div(&self, x: &Point) -> f64 {
        self.space.div(x).iter().zip(&self.coeffs).map(|(b, c)| b * c).sum()
    }

    /// Coefficients on the `x P_s` part; zero exactly when the function lies
    /// in `[P_s]^d`.
    pub fn homogeneous_coeffs(&self) -> &[f64] {
        &self.coeffs[self.space.polynomial_part()..]
    }
}

/// Projects `v` onto `RT_s(K)` by matching normal moments against `P_s(e)` on
/// every facet and, for `s >= 1`, interior moments against `[P_{s-1}]^d`.
pub fn rt_project(
    mesh: &SimplicialMesh,
    element: usize,
    degree: usize,
    quad_order: usize,
    v: impl Fn(&Point) -> [f64; 3],
) -> Result<RtFunction> {
    let space = RtSpace::new(mesh, element, degree)?;
    let dim = mesh.dim();
    let n = space.size();
    let geo = mesh.element_geometry(element)?;
    let order = quad_order.max(2 * degree + 2);
    let mut mat = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    let mut row = 0;

    let facet_rule = make_quadrature(dim - 1, order)?;
    let facet_basis = make_basis(dim - 1, degree)?;
    for (local, &f) in mesh.element_facets(element).iter().enumerate() {
        let verts: Vec<Point> = mesh.facet(f).iter().map(|&i| *mesh.vertex(i)).collect();
        let patch = FacetPatch::from_vertices(dim, &verts, facet_basis.clone())?;
        let normal = geo.outward_normals[local];
        for (s, w) in facet_rule.points.iter().zip(&facet_rule.weights) {
            let x = patch.point(s);
            let psi = patch.eval(s);
            let wt = w * patch.jacobian;
            let vn: f64 = (0..dim).map(|c| v(&x)[c] * normal[c]).sum();
            let bn: Vec<f64> = space.eval(&x).iter().map(|b| (0..dim).map(|c| b[c] * normal[c]).sum()).collect();
            for (i, p) in psi.iter().enumerate() {
                rhs[row + i] += wt * vn * p;
                for (j, b) in bn.iter().enumerate() {
                    mat[(row + i, j)] += wt * b * p;
                }
            }
        }
        row += patch.size();
    }

    if degree >= 1 {
        let test = PhysicalBasis::new(mesh, element, degree - 1)?;
        let m = test.size();
        let rule = make_quadrature(dim, order)?;
        let det = test.map.det.abs();
        for (xi, w) in rule.points.iter().zip(&rule.weights) {
            let x = test.map.apply(xi);
            let phi = test.eval_ref(xi);
            let vx = v(&x);
            let b = space.eval(&x);
            let wt = w * det;
            for c in 0..dim {
                for (i, p) in phi.iter().enumerate() {
                    let r = row + c * m + i;
                    rhs[r] += wt * vx[c] * p;
                    for (j, bj) in b.iter().enumerate() {
                        mat[(r, j)] += wt * bj[c] * p;
                    }
                }
            }
        }
        row += dim * m;
    }
    debug_assert_eq!(row, n);

    let coeffs = mat
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Internal("RT moment matrix is singular".into()))?;
    Ok(RtFunction { space, coeffs: coeffs.iter().copied().collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference_triangle() -> SimplicialMesh {
        SimplicialMesh::from_elements(2, vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], vec![0, 1, 2]).unwrap()
    }

    #[test]
    fn dimensions() {
        assert_eq!(rt_dimension(2, 0), 3);
        assert_eq!(rt_dimension(2, 1), 8);
        assert_eq!(rt_dimension(3, 0), 4);
        assert_eq!(rt_dimension(3, 1), 15);
        let mesh = reference_triangle();
        for s in 0..4 {
            assert_eq!(RtSpace::new(&mesh, 0, s).unwrap().size(), rt_dimension(2, s));
        }
    }

    #[test]
    fn idempotent_on_rt_member() {
        let mesh = reference_triangle();
        // (1 + x, 2 y) + x * (x + y) lies in RT_1.
        let v = |x: &Point| [1.0 + x[0] + x[0] * (x[0] + x[1]), 2.0 * x[1] + x[1] * (x[0] + x[1]), 0.0];
        let p = rt_project(&mesh, 0, 1, 8, v).unwrap();
        for x in [[0.2, 0.2, 0.0], [0.6, 0.1, 0.0], [0.1, 0.85, 0.0]] {
            let (a, b) = (p.eval(&x), v(&x));
            assert_relative_eq!(a[0], b[0], epsilon = 1e-12);
            assert_relative_eq!(a[1], b[1], epsilon = 1e-12);
        }
    }

    #[test]
    fn divergence_free_polynomial_stays_polynomial() {
        let mesh = reference_triangle();
        let p = rt_project(&mesh, 0, 1, 8, |x| [x[1], x[0], 0.0]).unwrap();
        assert!(p.homogeneous_coeffs().iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn commuting_identity_for_quadratic_field() {
        let mesh = reference_triangle();
        let v = |x: &Point| [x[1] * x[1], x[0] * x[0], 0.0];
        let p = rt_project(&mesh, 0, 1, 8, v).unwrap();
        // div v = 0, so (div P v, phi) must vanish for phi in P_1.
        let basis = PhysicalBasis::new(&mesh, 0, 1).unwrap();
        let rule = make_quadrature(2, 8).unwrap();
        for i in 0..basis.size() {
            let r = rule.integrate(|x| p.div(x) * basis.eval(x)[i]);
            assert!(r.abs() <= 1e-12, "moment {i}: {r}");
        }
    }
}
