//! Closed-form fields built from sums of separable products, with exact
//! first and second derivatives.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::forms::{cross, curl_of_curl_space, curl_of_vector, BoundaryValues, ProblemData, SourceTerms};
use crate::mesh::Point;
use crate::params::PhysicalParameters;

/// One-dimensional factor of a separable term.
#[derive(Debug, Clone, PartialEq)]
pub enum Factor {
    /// Polynomial with ascending coefficients.
    Poly(Vec<f64>),
    /// `sin(w t)^a cos(w t)^b`.
    Trig { sin: i32, cos: i32, w: f64 },
}

impl Factor {
    pub fn one() -> Self {
        Factor::Poly(vec![1.0])
    }

    /// Value, first and second derivative at `t`.
    pub fn eval(&self, t: f64) -> [f64; 3] {
        match self {
            Factor::Poly(c) => {
                let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
                for (i, ci) in c.iter().enumerate().rev() {
                    v = v * t + ci;
                    if i >= 1 {
                        d1 = d1 * t + i as f64 * ci;
                    }
                    if i >= 2 {
                        d2 = d2 * t + (i * (i - 1)) as f64 * ci;
                    }
                }
                [v, d1, d2]
            }
            Factor::Trig { sin: a, cos: b, w } => {
                let (s, c) = (w * t).sin_cos();
                let (a, b, w) = (*a, *b, *w);
                let term = |coef: f64, p: i32, q: i32| if coef == 0.0 { 0.0 } else { coef * s.powi(p) * c.powi(q) };
                let af = a as f64;
                let bf = b as f64;
                let v = term(1.0, a, b);
                let d1 = w * (term(af, a - 1, b + 1) - term(bf, a + 1, b - 1));
                let d2 = w
                    * w
                    * (term(af * (af - 1.0), a - 2, b + 2) - term(af * (bf + 1.0) + bf * (af + 1.0), a, b)
                        + term(bf * (bf - 1.0), a + 2, b - 2));
                [v, d1, d2]
            }
        }
    }
}

/// `coef * f_0(x) f_1(y) f_2(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub factors: [Factor; 3],
}

impl Term {
    pub fn new(coef: f64, fx: Factor, fy: Factor, fz: Factor) -> Self {
        Self { coef, factors: [fx, fy, fz] }
    }
}

/// Value, gradient and Hessian of a scalar field at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: [f64; 3],
    pub hess: [[f64; 3]; 3],
}

impl Jet {
    pub fn laplacian(&self) -> f64 {
        self.hess[0][0] + self.hess[1][1] + self.hess[2][2]
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScalarField {
    pub terms: Vec<Term>,
}

impl ScalarField {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: Vec<Term>) -> Self {
        Self { terms }
    }

    pub fn jet(&self, x: &Point) -> Jet {
        let mut j = Jet::default();
        for term in &self.terms {
            let f: Vec<[f64; 3]> = (0..3).map(|d| term.factors[d].eval(x[d])).collect();
            let prod = |skip: &[usize]| -> f64 { (0..3).filter(|d| !skip.contains(d)).map(|d| f[d][0]).product() };
            j.value += term.coef * prod(&[]);
            for a in 0..3 {
                j.grad[a] += term.coef * f[a][1] * prod(&[a]);
                j.hess[a][a] += term.coef * f[a][2] * prod(&[a]);
                for b in 0..3 {
                    if b != a {
                        j.hess[a][b] += term.coef * f[a][1] * f[b][1] * prod(&[a, b]);
                    }
                }
            }
        }
        j
    }

    pub fn value(&self, x: &Point) -> f64 {
        self.jet(x).value
    }

    /// Sum of two fields.
    pub fn plus(&self, other: &ScalarField) -> ScalarField {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        ScalarField { terms }
    }
}

/// Jets of every component of a vector field.
#[derive(Debug, Clone, Copy, Default)]
pub struct VectorJet {
    pub c: [Jet; 3],
}

impl VectorJet {
    pub fn value(&self) -> [f64; 3] {
        [self.c[0].value, self.c[1].value, self.c[2].value]
    }

    /// `jac[i][m] = d_m v_i`.
    pub fn jacobian(&self) -> [[f64; 3]; 3] {
        [self.c[0].grad, self.c[1].grad, self.c[2].grad]
    }

    pub fn divergence(&self, dim: usize) -> f64 {
        (0..dim).map(|i| self.c[i].grad[i]).sum()
    }

    pub fn laplacian(&self) -> [f64; 3] {
        [self.c[0].laplacian(), self.c[1].laplacian(), self.c[2].laplacian()]
    }

    pub fn curl(&self, dim: usize) -> [f64; 3] {
        curl_of_vector(dim, &self.jacobian())
    }

    /// `curl curl v` from second derivatives.
    pub fn curl_curl(&self, dim: usize) -> [f64; 3] {
        // Jacobian of curl v: d_m (curl v) from the Hessians.
        let mut jc = [[0.0; 3]; 3];
        for m in 0..3 {
            let jm = [
                [self.c[0].hess[0][m], self.c[0].hess[1][m], self.c[0].hess[2][m]],
                [self.c[1].hess[0][m], self.c[1].hess[1][m], self.c[1].hess[2][m]],
                [self.c[2].hess[0][m], self.c[2].hess[1][m], self.c[2].hess[2][m]],
            ];
            let c = curl_of_vector(dim, &jm);
            for i in 0..3 {
                jc[i][m] = c[i];
            }
        }
        curl_of_curl_space(dim, &jc)
    }
}

/// Exact fields of a manufactured problem together with its parameters.
#[derive(Debug, Clone)]
pub struct ManufacturedCase {
    pub name: String,
    pub dim: usize,
    pub params: PhysicalParameters,
    pub u: [ScalarField; 3],
    pub b: [ScalarField; 3],
    pub t: ScalarField,
    pub p: ScalarField,
    pub r: ScalarField,
    /// Impose the traces of the exact fields on the boundary instead of zero.
    pub boundary_data: bool,
}

/// Exact state at one point.
#[derive(Debug, Clone, Copy)]
pub struct ExactPoint {
    pub u: VectorJet,
    pub b: VectorJet,
    pub t: Jet,
    pub p: Jet,
    pub r: Jet,
}

fn poly(c: &[f64]) -> Factor {
    Factor::Poly(c.to_vec())
}

fn trig(sin: i32, cos: i32) -> Factor {
    Factor::Trig { sin, cos, w: PI }
}

/// Example fields on the unit square (`1`) or unit cube (`2`), all
/// parameters equal to one.
pub fn make_case(example: usize) -> Result<ManufacturedCase> {
    match example {
        1 => {
            // x^2 (x-1)^2, y(y-1)(2y-1), x(x-1)(x-1/2), x(x-1)
            let f = [0.0, 0.0, 1.0, -2.0, 1.0];
            let g = [0.0, 1.0, -3.0, 2.0];
            let a = [0.0, 0.5, -1.5, 1.0];
            let q = [0.0, -1.0, 1.0];
            let u1 = ScalarField::from_terms(vec![Term::new(-1.0, poly(&f), poly(&g), Factor::one())]);
            let u2 = ScalarField::from_terms(vec![Term::new(1.0, poly(&g), poly(&f), Factor::one())]);
            let pr = ScalarField::from_terms(vec![Term::new(1.0, poly(&a), poly(&a), Factor::one())]);
            let t = ScalarField::from_terms(vec![Term::new(1.0, poly(&q), poly(&q), Factor::one())]);
            Ok(ManufacturedCase {
                name: "example 1".into(),
                dim: 2,
                params: PhysicalParameters::unit(2),
                u: [u1.clone(), u2.clone(), ScalarField::zero()],
                b: [u1, u2, ScalarField::zero()],
                t,
                p: pr.clone(),
                r: pr,
                boundary_data: false,
            })
        }
        2 => {
            let c = PI / 20.0;
            let u1 = ScalarField::from_terms(vec![Term::new(-c, trig(2, 0), trig(1, 1), trig(1, 1))]);
            let u2 = ScalarField::from_terms(vec![Term::new(2.0 * c, trig(1, 1), trig(2, 0), trig(1, 1))]);
            let u3 = ScalarField::from_terms(vec![Term::new(-c, trig(1, 1), trig(1, 1), trig(2, 0))]);
            let t = u1.plus(&u2).plus(&u3);
            let p = ScalarField::from_terms(vec![Term::new(0.1, trig(0, 1), trig(0, 1), trig(0, 1))]);
            let r = ScalarField::from_terms(vec![Term::new(0.1, trig(1, 0), trig(1, 0), trig(1, 0))]);
            Ok(ManufacturedCase {
                name: "example 2".into(),
                dim: 3,
                params: PhysicalParameters::unit(3),
                u: [u1.clone(), u2.clone(), u3.clone()],
                b: [u1, u2, u3],
                t,
                p,
                r,
                boundary_data: false,
            })
        }
        _ => Err(invalid(format!("unknown example {example}; expected 1 or 2"))),
    }
}

fn vector_jet(f: &[ScalarField; 3], x: &Point) -> VectorJet {
    VectorJet { c: [f[0].jet(x), f[1].jet(x), f[2].jet(x)] }
}

impl ManufacturedCase {
    pub fn exact(&self, x: &Point) -> ExactPoint {
        ExactPoint { u: vector_jet(&self.u, x), b: vector_jet(&self.b, x), t: self.t.jet(x), p: self.p.jet(x), r: self.r.jet(x) }
    }

    /// Same fields with different parameters.
    pub fn with_params(mut self, params: PhysicalParameters) -> Self {
        self.params = params;
        self
    }

    /// Right-hand sides that make the exact fields solve the strong equations.
    pub fn forcing(&self, x: &Point) -> SourceTerms {
        forcing(self, &self.params, x)
    }

    /// Residuals of the strong equations with the given right-hand sides.
    pub fn strong_residual(&self, params: &PhysicalParameters, x: &Point, s: &SourceTerms) -> [f64; 5] {
        let f = forcing(self, params, x);
        let e = self.exact(x);
        let d = self.dim;
        let r1 = (0..d).map(|i| (f.f1[i] - s.f1[i]).abs()).fold(0.0, f64::max);
        let r2 = (0..d).map(|i| (f.f2[i] - s.f2[i]).abs()).fold(0.0, f64::max);
        [r1, r2, (f.f3 - s.f3).abs(), e.u.divergence(d).abs(), e.b.divergence(d).abs()]
    }
}

/// `f1 = -(1/Ha^2) Δu + (1/N)(u.∇)u + ∇p - (1/Rm)(curl B) x B + (Gr/(N Re^2)) T g/|g|`,
/// `f2 = (1/Rm) curl curl B - curl(u x B) + ∇r`,
/// `f3 = -(1/(Pr Re)) ΔT + u.∇T`.
pub fn forcing(case: &ManufacturedCase, params: &PhysicalParameters, x: &Point) -> SourceTerms {
    let d = case.dim;
    let e = case.exact(x);
    let u = e.u.value();
    let ju = e.u.jacobian();
    let b = e.b.value();
    let jb = e.b.jacobian();
    let lap_u = e.u.laplacian();
    let curl_b = e.b.curl(d);
    // (curl B) x B; in 2D the curl is the scalar c and c e_z x B = (-c B2, c B1).
    let lorentz = if d == 2 { [-curl_b[0] * b[1], curl_b[0] * b[0], 0.0] } else { cross(3, &curl_b, &b) };
    let g = params.gravity_unit();
    let buoy = params.buoyancy_coefficient();
    let mut f1 = [0.0; 3];
    for i in 0..d {
        let adv: f64 = (0..d).map(|j| u[j] * ju[i][j]).sum();
        f1[i] = -lap_u[i] / (params.ha * params.ha) + adv / params.n + e.p.grad[i] - lorentz[i] / params.rm
            + buoy * e.t.value * g[i];
    }
    // curl(u x B) from the Jacobian of u x B.
    let mut jx = [[0.0; 3]; 3];
    for m in 0..d {
        let du = [ju[0][m], ju[1][m], ju[2][m]];
        let db = [jb[0][m], jb[1][m], jb[2][m]];
        let a1 = cross(d, &du, &b);
        let a2 = cross(d, &u, &db);
        for c in 0..3 {
            jx[c][m] = a1[c] + a2[c];
        }
    }
    let curl_uxb = curl_of_curl_space(d, &jx);
    let cc = e.b.curl_curl(d);
    let mut f2 = [0.0; 3];
    for i in 0..d {
        f2[i] = cc[i] / params.rm - curl_uxb[i] + e.r.grad[i];
    }
    let adv_t: f64 = (0..d).map(|j| u[j] * e.t.grad[j]).sum();
    let f3 = -e.t.laplacian() / params.pr_re() + adv_t;
    SourceTerms { f1, f2, f3 }
}

impl ProblemData for ManufacturedCase {
    fn source(&self, x: &Point) -> SourceTerms {
        self.forcing(x)
    }

    fn boundary_values(&self, x: &Point) -> Option<BoundaryValues> {
        if !self.boundary_data {
            return None;
        }
        let e = self.exact(x);
        Some(BoundaryValues { u: e.u.value(), b: e.b.value(), t: e.t.value, r: e.r.value })
    }

    fn has_boundary_data(&self) -> bool {
        self.boundary_data
    }
}
