//! Collapsed-coordinate Gauss–Jacobi rules on the reference simplex
//! `{x_i >= 0, sum x_i <= 1}`.
//!
//! The simplex is the image of the unit cube under the Duffy map; the Jacobian
//! factors `(1 - t)^a` are absorbed into Gauss–Jacobi weights, so `n` points
//! per direction integrate total degree `2n - 1` exactly.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Highest polynomial order the rule family is built for.
pub const MAX_QUADRATURE_ORDER: usize = 60;

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub dim: usize,
    pub order: usize,
    /// Points in reference coordinates; unused coordinates are zero.
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&[f64; 3]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }
}

/// Gauss–Jacobi nodes and weights on `[0, 1]` for the weight `(1 - t)^alpha`.
pub fn gauss_jacobi_unit(n: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    // Golub–Welsch on [-1, 1] with weight (1-x)^a (1+x)^b, b = 0.
    let (a, b) = (alpha, 0.0);
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let k = i as f64;
        let s = 2.0 * k + a + b;
        jm[(i, i)] = if i == 0 { (b - a) / (a + b + 2.0) } else { (b * b - a * a) / (s * (s + 2.0)) };
        if i + 1 < n {
            let k1 = k + 1.0;
            let s1 = 2.0 * k1 + a + b;
            let off = (4.0 * k1 * (k1 + a) * (k1 + b) * (k1 + a + b) / (s1 * s1 * (s1 + 1.0) * (s1 - 1.0))).sqrt();
            jm[(i, i + 1)] = off;
            jm[(i + 1, i)] = off;
        }
    }
    let eig = SymmetricEigen::new(jm);
    // mu0 = int_{-1}^{1} (1-x)^a dx = 2^{a+1} / (a+1)
    let mu0 = 2f64.powf(a + 1.0) / (a + 1.0);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let x = eig.eigenvalues[i];
            let v0 = eig.eigenvectors[(0, i)];
            ((1.0 + x) / 2.0, mu0 * v0 * v0 / 2f64.powf(a + 1.0))
        })
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    pairs.into_iter().unzip()
}

/// Builds a rule on the reference `dim`-simplex exact for total degree `order`.
pub fn make_quadrature(dim: usize, order: usize) -> Result<QuadratureRule> {
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidArgument(format!("quadrature dimension must be 1, 2 or 3, got {dim}")));
    }
    if order == 0 || order > MAX_QUADRATURE_ORDER {
        return Err(Error::Unsupported(format!(
            "quadrature order {order} outside the implemented range 1..={MAX_QUADRATURE_ORDER}"
        )));
    }
    let n = order / 2 + 1;
    let (x0, w0) = gauss_jacobi_unit(n, 0.0);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    match dim {
        1 => {
            for (x, w) in x0.iter().zip(&w0) {
                points.push([*x, 0.0, 0.0]);
                weights.push(*w);
            }
        }
        2 => {
            let (x1, w1) = gauss_jacobi_unit(n, 1.0);
            for (eta, we) in x1.iter().zip(&w1) {
                for (xi, wx) in x0.iter().zip(&w0) {
                    points.push([xi * (1.0 - eta), *eta, 0.0]);
                    weights.push(wx * we);
                }
            }
        }
        _ => {
            let (x1, w1) = gauss_jacobi_unit(n, 1.0);
            let (x2, w2) = gauss_jacobi_unit(n, 2.0);
            for (zeta, wz) in x2.iter().zip(&w2) {
                for (eta, we) in x1.iter().zip(&w1) {
                    for (xi, wx) in x0.iter().zip(&w0) {
                        points.push([xi * (1.0 - eta) * (1.0 - zeta), eta * (1.0 - zeta), *zeta]);
                        weights.push(wx * we * wz);
                    }
                }
            }
        }
    }
    Ok(QuadratureRule { dim, order, points, weights })
}

/// Closed-form integral of `x^a y^b z^c` over the reference simplex:
/// `a! b! c! / (a + b + c + dim)!`.
pub fn monomial_integral(dim: usize, exps: &[usize]) -> f64 {
    let fact = |n: usize| (1..=n).map(|i| i as f64).product::<f64>();
    let total: usize = exps[..dim].iter().sum();
    exps[..dim].iter().map(|&e| fact(e)).product::<f64>() / fact(total + dim)
}
