use nalgebra::{DMatrix, DVector};

use super::{make_basis, make_quadrature, PolynomialBasis};
use crate::error::{Error, Result};
use crate::mesh::{AffineMap, Point, SimplicialMesh};

/// Reference basis pushed forward to one element and rescaled by
/// `|det J|^{-1/2}`, which keeps it orthonormal on the physical element.
#[derive(Debug, Clone)]
pub struct PhysicalBasis {
    pub reference: PolynomialBasis,
    pub map: AffineMap,
    pub scale: f64,
}

impl PhysicalBasis {
    pub fn new(mesh: &SimplicialMesh, element: usize, degree: usize) -> Result<Self> {
        mesh.check_element(element)?;
        let reference = make_basis(mesh.dim(), degree)?;
        let map = mesh.affine_map(element);
        Ok(Self::from_parts(reference, map))
    }

    pub fn from_parts(reference: PolynomialBasis, map: AffineMap) -> Self {
        let scale = 1.0 / map.det.abs().sqrt();
        Self { reference, map, scale }
    }

    pub fn size(&self) -> usize {
        self.reference.size()
    }

    pub fn eval(&self, x: &Point) -> Vec<f64> {
        self.eval_ref(&self.map.apply_inverse(x))
    }

    pub fn eval_ref(&self, xi: &[f64]) -> Vec<f64> {
        let mut v = self.reference.eval(xi);
        v.iter_mut().for_each(|c| *c *= self.scale);
        v
    }

    pub fn grad(&self, x: &Point) -> Vec<[f64; 3]> {
        self.grad_ref(&self.map.apply_inverse(x))
    }

    pub fn grad_ref(&self, xi: &[f64]) -> Vec<[f64; 3]> {
        self.reference
            .grad(xi)
            .iter()
            .map(|g| {
                let mut p = self.map.push_gradient(g);
                p.iter_mut().for_each(|c| *c *= self.scale);
                p
            })
            .collect()
    }

    /// Evaluates `sum_i coeffs[i] * phi_i(x)`.
    pub fn evaluate(&self, coeffs: &[f64], x: &Point) -> f64 {
        self.eval(x).iter().zip(coeffs).map(|(p, c)| p * c).sum()
    }
}

/// Parameterisation of one facet over the reference `(dim-1)`-simplex using
/// the facet's sorted vertex order, plus an orthonormal facet basis.
///
/// Both neighbouring elements see the same parameterisation, so facet
/// coefficients are single-valued.
#[derive(Debug, Clone)]
pub struct FacetPatch {
    pub dim: usize,
    pub origin: Point,
    pub edges: Vec<Point>,
    /// Ratio of physical to reference facet measure.
    pub jacobian: f64,
    pub basis: PolynomialBasis,
    pub scale: f64,
}

impl FacetPatch {
    pub fn new(mesh: &SimplicialMesh, facet: usize, degree: usize) -> Result<Self> {
        if facet >= mesh.num_facets() {
            return Err(Error::InvalidArgument(format!("facet id {facet} out of range")));
        }
        let verts: Vec<Point> = mesh.facet(facet).iter().map(|&v| *mesh.vertex(v)).collect();
        Self::from_vertices(mesh.dim(), &verts, make_basis(mesh.dim() - 1, degree)?)
    }

    pub fn from_vertices(dim: usize, verts: &[Point], basis: PolynomialBasis) -> Result<Self> {
        let origin = verts[0];
        let edges: Vec<Point> = verts[1..].iter().map(|v| [v[0] - origin[0], v[1] - origin[1], v[2] - origin[2]]).collect();
        let jacobian = match dim {
            2 => (edges[0][0].powi(2) + edges[0][1].powi(2) + edges[0][2].powi(2)).sqrt(),
            3 => {
                let (a, b) = (edges[0], edges[1]);
                let c = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
                (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
            }
            _ => return Err(Error::InvalidArgument(format!("facets exist for dim 2 or 3, got {dim}"))),
        };
        Ok(Self { dim, origin, edges, jacobian, scale: 1.0 / jacobian.sqrt(), basis })
    }

    /// Physical point of reference facet coordinates `s`.
    pub fn point(&self, s: &[f64]) -> Point {
        let mut x = self.origin;
        for (j, e) in self.edges.iter().enumerate() {
            for c in 0..3 {
                x[c] += s[j] * e[c];
            }
        }
        x
    }

    pub fn size(&self) -> usize {
        self.basis.size()
    }

    pub fn eval(&self, s: &[f64]) -> Vec<f64> {
        let mut v = self.basis.eval(s);
        v.iter_mut().for_each(|c| *c *= self.scale);
        v
    }

    /// Area (length in 2D) of the facet.
    pub fn measure(&self) -> f64 {
        self.jacobian / if self.dim == 3 { 2.0 } else { 1.0 }
    }
}

fn solve_mass(mass: DMatrix<f64>, rhs: DVector<f64>, what: &str) -> Result<Vec<f64>> {
    let chol = mass
        .cholesky()
        .ok_or_else(|| Error::Internal(format!("{what} mass matrix is not positive definite")))?;
    Ok(chol.solve(&rhs).iter().copied().collect())
}

/// L² projection onto `P_degree(K)`, returned as coefficients of the
/// element's [`PhysicalBasis`].
pub fn l2_project_element(
    mesh: &SimplicialMesh,
    element: usize,
    degree: usize,
    quad_order: usize,
    f: impl Fn(&Point) -> f64,
) -> Result<Vec<f64>> {
    let basis = PhysicalBasis::new(mesh, element, degree)?;
    let rule = make_quadrature(mesh.dim(), quad_order.max(2 * degree).max(1))?;
    let n = basis.size();
    let det = basis.map.det.abs();
    let mut mass = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    for (xi, w) in rule.points.iter().zip(&rule.weights) {
        let phi = basis.eval_ref(xi);
        let x = basis.map.apply(xi);
        let fx = f(&x);
        let wt = w * det;
        for i in 0..n {
            rhs[i] += wt * fx * phi[i];
            for j in 0..n {
                mass[(i, j)] += wt * phi[i] * phi[j];
            }
        }
    }
    solve_mass(mass, rhs, "element")
}

/// L² projection onto `P_degree(e)`, returned as coefficients of the
/// facet's [`FacetPatch`] basis.
pub fn l2_project_facet(
    mesh: &SimplicialMesh,
    facet: usize,
    degree: usize,
    quad_order: usize,
    f: impl Fn(&Point) -> f64,
) -> Result<Vec<f64>> {
    let patch = FacetPatch::new(mesh, facet, degree)?;
    project_on_patch(&patch, quad_order, f)
}

pub(crate) fn project_on_patch(patch: &FacetPatch, quad_order: usize, f: impl Fn(&Point) -> f64) -> Result<Vec<f64>> {
    let rule = make_quadrature(patch.dim - 1, quad_order.max(2 * patch.basis.degree()).max(1))?;
    let n = patch.size();
    let mut mass = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    for (s, w) in rule.points.iter().zip(&rule.weights) {
        let psi = patch.eval(s);
        let fx = f(&patch.point(s));
        let wt = w * patch.jacobian;
        for i in 0..n {
            rhs[i] += wt * fx * psi[i];
            for j in 0..n {
                mass[(i, j)] += wt * psi[i] * psi[j];
            }
        }
    }
    solve_mass(mass, rhs, "facet")
}
