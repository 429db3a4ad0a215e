//! Polynomial spaces on simplices: orthonormal reference bases, quadrature,
//! element and facet L² projections, and the Raviart–Thomas projection.

mod projection;
mod quadrature;
mod rt;

pub use projection::{l2_project_element, l2_project_facet, FacetPatch, PhysicalBasis};
pub use quadrature::{gauss_jacobi_unit, make_quadrature, monomial_integral, QuadratureRule, MAX_QUADRATURE_ORDER};
pub use rt::{rt_dimension, rt_project, RtFunction, RtSpace};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// `C(n, r)` as an integer.
pub fn binomial(n: usize, r: usize) -> usize {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    (0..r).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Dimension of `P_degree` in `dim` variables.
pub fn poly_dim(dim: usize, degree: usize) -> usize {
    binomial(degree + dim, dim)
}

/// Exponent tuples of all monomials of total degree `<= degree`, graded.
pub fn monomial_exponents(dim: usize, degree: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity(poly_dim(dim, degree));
    for total in 0..=degree {
        match dim {
            0 => {
                if total == 0 {
                    out.push([0, 0, 0]);
                }
            }
            1 => out.push([total, 0, 0]),
            2 => {
                for a in (0..=total).rev() {
                    out.push([a, total - a, 0]);
                }
            }
            _ => {
                for a in (0..=total).rev() {
                    for b in (0..=total - a).rev() {
                        out.push([a, b, total - a - b]);
                    }
                }
            }
        }
    }
    out
}

/// Integer powers `x^0 ..= x^degree` for each coordinate.
fn powers(x: &[f64], dim: usize, degree: usize) -> [[f64; 16]; 3] {
    let mut p = [[0.0; 16]; 3];
    for d in 0..dim {
        p[d][0] = 1.0;
        for e in 1..=degree {
            p[d][e] = p[d][e - 1] * x[d];
        }
    }
    p
}

/// `L²`-orthonormal basis of `P_degree` on the reference simplex.
///
/// Functions are ordered by degree, so the first `poly_dim(dim, j)` of them
/// span `P_j` for every `j <= degree`.
#[derive(Debug, Clone)]
pub struct PolynomialBasis {
    dim: usize,
    degree: usize,
    exps: Vec<[usize; 3]>,
    /// Row `i` holds the monomial coefficients of basis function `i`.
    coeffs: DMatrix<f64>,
}

pub const MAX_BASIS_DEGREE: usize = 12;

/// Builds the orthonormal basis from a Cholesky factor of the exact monomial
/// Gram matrix on the reference simplex.
pub fn make_basis(dim: usize, degree: usize) -> Result<PolynomialBasis> {
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidArgument(format!("basis dimension must be 1, 2 or 3, got {dim}")));
    }
    if degree > MAX_BASIS_DEGREE {
        return Err(Error::Unsupported(format!("polynomial degree {degree} exceeds {MAX_BASIS_DEGREE}")));
    }
    Ok(PolynomialBasis::build(dim, degree))
}

impl PolynomialBasis {
    fn build(dim: usize, degree: usize) -> Self {
        let exps = monomial_exponents(dim, degree);
        let n = exps.len();
        let gram = DMatrix::from_fn(n, n, |i, j| {
            let e = [exps[i][0] + exps[j][0], exps[i][1] + exps[j][1], exps[i][2] + exps[j][2]];
            monomial_integral(dim, &e)
        });
        let chol = gram.cholesky().expect("monomial Gram matrix is positive definite");
        let l = chol.l();
        let coeffs = l.solve_lower_triangular(&DMatrix::identity(n, n)).expect("triangular factor is invertible");
        Self { dim, degree, exps, coeffs }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn size(&self) -> usize {
        self.exps.len()
    }

    fn monomials(&self, x: &[f64]) -> Vec<f64> {
        let p = powers(x, self.dim, self.degree);
        self.exps
            .iter()
            .map(|e| (0..self.dim).map(|d| p[d][e[d]]).product())
            .collect()
    }

    /// Values of all basis functions at a reference point.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.size()];
        self.eval_into(x, &mut out);
        out
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let m = self.monomials(x);
        let n = self.size();
        for i in 0..n {
            let mut s = 0.0;
            // Lower triangular: function i only uses monomials 0..=i.
            for (j, mj) in m.iter().enumerate().take(i + 1) {
                s += self.coeffs[(i, j)] * mj;
            }
            out[i] = s;
        }
    }

    /// Reference gradients; `out[i][d]` is the `d`-th partial of function `i`.
    pub fn grad(&self, x: &[f64]) -> Vec<[f64; 3]> {
        let mut out = vec![[0.0; 3]; self.size()];
        self.grad_into(x, &mut out);
        out
    }

    pub fn grad_into(&self, x: &[f64], out: &mut [[f64; 3]]) {
        let p = powers(x, self.dim, self.degree);
        let n = self.size();
        let dm: Vec<[f64; 3]> = self
            .exps
            .iter()
            .map(|e| {
                let mut g = [0.0; 3];
                for (d, gd) in g.iter_mut().enumerate().take(self.dim) {
                    if e[d] == 0 {
                        continue;
                    }
                    let mut v = e[d] as f64 * p[d][e[d] - 1];
                    for o in 0..self.dim {
                        if o != d {
                            v *= p[o][e[o]];
                        }
                    }
                    *gd = v;
                }
                g
            })
            .collect();
        for i in 0..n {
            let mut g = [0.0; 3];
            for (j, dmj) in dm.iter().enumerate().take(i + 1) {
                let c = self.coeffs[(i, j)];
                for d in 0..self.dim {
                    g[d] += c * dmj[d];
                }
            }
            out[i] = g;
        }
    }
}
