use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::Mat;

use super::multifrontal::MultifrontalLu;
use super::system::SparseSystem;
use crate::error::{Error, Result};

/// Systems whose estimated 1-norm condition number exceeds this are treated
/// as singular.
pub const SINGULAR_CONDITION: f64 = 1e13;

/// Required backward error `|Ax - b| / (|A| |x| + |b|)`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub x: Vec<f64>,
    /// Backward error in the infinity norm.
    pub relative_residual: f64,
    /// Estimate of the 1-norm condition number.
    pub condition_estimate: f64,
}

/// Either factorisation behind a common solve interface.
enum Factor {
    /// Pivoting confined to supernodes, low fill.
    Frontal(MultifrontalLu),
    /// Unrestricted threshold pivoting, used when the frontal factor breaks down.
    General(Lu<usize, f64>),
}

impl Factor {
    fn general(system: &SparseSystem) -> Result<Self> {
        let lu = system.matrix.sp_lu().map_err(|e| Error::SingularSystem(format!("sparse LU failed: {e:?}")))?;
        Ok(Factor::General(lu))
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            Factor::Frontal(f) => f.solve(b),
            Factor::General(lu) => col(&lu.solve(Mat::from_fn(b.len(), 1, |i, _| b[i]).as_ref())),
        }
    }

    fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        match self {
            Factor::Frontal(f) => f.solve_transpose(b),
            Factor::General(lu) => col(&lu.solve_transpose(Mat::from_fn(b.len(), 1, |i, _| b[i]).as_ref())),
        }
    }
}

fn col(m: &Mat<f64>) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, 0)]).collect()
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn backward_error(system: &SparseSystem, a_norm: f64, x: &[f64]) -> (Vec<f64>, f64) {
    let ax = system.apply(x);
    let r: Vec<f64> = system.rhs.iter().zip(&ax).map(|(b, y)| b - y).collect();
    let denom = a_norm * norm_inf(x) + norm_inf(&system.rhs);
    let rel = if denom > 0.0 { norm_inf(&r) / denom } else { norm_inf(&r) };
    (r, rel)
}

/// Hager's estimate of `|A^{-1}|_1` from solves with `A` and `A^T`.
fn inverse_norm_estimate(lu: &Factor, n: usize) -> f64 {
    let mut x = vec![1.0 / n as f64; n];
    let mut est = 0.0;
    for iter in 0..5 {
        let y = lu.solve(&x);
        let ny: f64 = y.iter().map(|v| v.abs()).sum();
        if !ny.is_finite() {
            return f64::INFINITY;
        }
        if iter > 0 && ny <= est {
            break;
        }
        est = ny;
        let xi: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
        let z = lu.solve_transpose(&xi);
        let (mut j, mut zmax) = (0, 0.0);
        for (i, v) in z.iter().enumerate() {
            if v.abs() > zmax {
                zmax = v.abs();
                j = i;
            }
        }
        let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
        if zmax <= ztx {
            break;
        }
        x = vec![0.0; n];
        x[j] = 1.0;
    }
    est
}

/// Solve plus up to three refinement steps; `None` on non-finite output.
fn refine(system: &SparseSystem, a_norm: f64, lu: &Factor) -> Option<(Vec<f64>, f64)> {
    let mut x = lu.solve(&system.rhs);
    if x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let (mut r, mut rel) = backward_error(system, a_norm, &x);
    for _ in 0..3 {
        if rel <= 1e-14 {
            break;
        }
        let dx = lu.solve(&r);
        let cand: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let (r2, rel2) = backward_error(system, a_norm, &cand);
        if !(rel2 < rel) {
            break;
        }
        x = cand;
        r = r2;
        rel = rel2;
    }
    Some((x, rel))
}

/// Sparse LU solve with iterative refinement and singularity detection.
pub fn solve_sparse(system: &SparseSystem) -> Result<LinearSolution> {
    let n = system.dim();
    if n == 0 {
        return Ok(LinearSolution { x: Vec::new(), relative_residual: 0.0, condition_estimate: 1.0 });
    }
    let a_norm = system.norm_inf();
    let frontal = Factor::Frontal(MultifrontalLu::factorize(&system.matrix)?);
    let (lu, x, rel) = match refine(system, a_norm, &frontal) {
        Some((x, rel)) if rel <= RESIDUAL_TOLERANCE => (frontal, x, rel),
        _ => {
            drop(frontal);
            let general = Factor::general(system)?;
            let (x, rel) = refine(system, a_norm, &general)
                .ok_or_else(|| Error::SingularSystem("LU solve produced non-finite values".into()))?;
            (general, x, rel)
        }
    };
    let condition = system.norm_one() * inverse_norm_estimate(&lu, n);
    if !condition.is_finite() || condition > SINGULAR_CONDITION {
        return Err(Error::SingularSystem(format!(
            "estimated condition number {condition:.3e} exceeds {SINGULAR_CONDITION:.0e}"
        )));
    }
    if rel > RESIDUAL_TOLERANCE {
        return Err(Error::SingularSystem(format!("backward error {rel:.3e} after refinement exceeds {RESIDUAL_TOLERANCE:.0e}")));
    }
    Ok(LinearSolution { x, relative_residual: rel, condition_estimate: condition })
}
