#![allow(dead_code)]

pub mod checks;

use mhd_hdg::verification::{make_case, Factor, ManufacturedCase, ScalarField, Term};

/// `c x^i y^j z^l`.
pub fn mono(c: f64, i: usize, j: usize, l: usize) -> Term {
    let f = |p: usize| {
        let mut v = vec![0.0; p + 1];
        v[p] = 1.0;
        Factor::Poly(v)
    };
    Term::new(c, f(i), f(j), f(l))
}

pub fn field(terms: &[(f64, usize, usize)]) -> ScalarField {
    ScalarField::from_terms(terms.iter().map(|&(c, i, j)| mono(c, i, j, 0)).collect())
}

/// Divergence-free `(psi_y, -psi_x)` for `psi = sum c x^i y^j`.
pub fn stream(terms: &[(f64, usize, usize)]) -> [ScalarField; 3] {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for &(c, i, j) in terms {
        if j > 0 {
            a.push((c * j as f64, i, j - 1));
        }
        if i > 0 {
            b.push((-c * i as f64, i - 1, j));
        }
    }
    [field(&a), field(&b), ScalarField::zero()]
}

/// Polynomial data in the discrete space of degree `k` on the unit square,
/// with the exact traces imposed on the boundary.
pub fn patch_case(k: usize) -> ManufacturedCase {
    let mut c = make_case(1).unwrap();
    c.name = format!("patch k={k}");
    c.boundary_data = true;
    match k {
        1 => {
            c.u = stream(&[(0.3, 2, 0), (0.2, 1, 1), (-0.15, 0, 2), (0.1, 1, 0), (0.3, 0, 1)]);
            c.b = stream(&[(-0.3, 2, 0), (0.1, 1, 1), (0.2, 0, 2), (-0.4, 1, 0), (-0.2, 0, 1)]);
            c.t = field(&[(1.0, 0, 0), (1.0, 1, 0), (-2.0, 0, 1)]);
            c.p = ScalarField::zero();
            c.r = field(&[(0.7, 0, 0)]);
        }
        2 => {
            c.u = stream(&[(1.0, 3, 0), (-0.5, 2, 1), (0.7, 1, 2), (0.2, 0, 3), (0.3, 1, 1), (0.1, 0, 1)]);
            c.b = stream(&[(-0.4, 3, 0), (0.6, 1, 2), (0.3, 2, 1), (-0.3, 0, 3), (0.5, 2, 0), (-0.2, 1, 0)]);
            c.t = field(&[(0.5, 0, 0), (1.0, 2, 0), (-1.0, 1, 1), (0.5, 0, 2), (0.2, 1, 0)]);
            c.p = field(&[(1.0, 1, 0), (-1.0, 0, 1)]);
            c.r = field(&[(2.0, 1, 0), (1.0, 0, 1), (-0.1, 0, 0)]);
        }
        _ => panic!("patch data only for k = 1, 2"),
    }
    c
}

/// One-element mesh on a perturbed, scaled and shifted reference simplex.
/// `p` holds at least 12 perturbations in `[-0.3, 0.3]`. Returns `None` for
/// nearly degenerate shapes.
pub fn perturbed_simplex(dim: usize, p: &[f64], scale: f64, shift: [f64; 3]) -> Option<mhd_hdg::SimplicialMesh> {
    let mut verts = vec![[0.0; 3]; dim + 1];
    for (v, vert) in verts.iter_mut().enumerate() {
        for c in 0..dim {
            let base = if v == c + 1 { 1.0 } else { 0.0 };
            vert[c] = shift[c] + scale * (base + p[v * 3 + c]);
        }
    }
    let mesh = mhd_hdg::SimplicialMesh::from_elements(dim, verts, (0..=dim).collect()).ok()?;
    let g = mesh.element_geometry(0).ok()?;
    // Shape regularity: volume against diameter^d.
    let regular = g.volume / g.diameter.powi(dim as i32) > 0.02;
    regular.then_some(mesh)
}
