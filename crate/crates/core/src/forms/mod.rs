//! Element-local contributions of every bilinear and trilinear form of the
//! HDG scheme.
//!
//! Blocks are returned with the sign they carry in the assembled system, so
//! the global matrix is the plain sum of all [`LocalBlocks`].

mod local;

pub use local::{
    local_buoyancy_block, local_constraint_block, local_convection_blocks, local_load, local_mixed_flux_block,
    local_stabilization_block, ConstraintKind, Physics, PrevIterate,
};

use nalgebra::{DMatrix, DVector};

use crate::basis::{make_basis, make_quadrature, poly_dim, PhysicalBasis, PolynomialBasis, QuadratureRule};
use crate::basis::FacetPatch;
use crate::error::{invalid, Result};
use crate::mesh::{Point, SimplicialMesh};

/// Unknown fields of one element. Trace fields carry the local facet index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Field {
    L,
    U,
    N,
    B,
    A,
    T,
    P,
    R,
    UHat(usize),
    BHat(usize),
    THat(usize),
    PHat(usize),
    RHat(usize),
}

impl Field {
    pub const INTERIOR: [Field; 8] = [Field::L, Field::U, Field::N, Field::B, Field::A, Field::T, Field::P, Field::R];

    /// Trace fields of local facet `l`, in storage order.
    pub fn traces(l: usize) -> [Field; 5] {
        [Field::UHat(l), Field::BHat(l), Field::THat(l), Field::PHat(l), Field::RHat(l)]
    }

    /// Number of local coefficients for polynomial degree `k`.
    pub fn size(&self, dim: usize, k: usize) -> usize {
        let nk = poly_dim(dim, k);
        let n1 = poly_dim(dim, k - 1);
        let mf = poly_dim(dim - 1, k);
        match self {
            Field::L => dim * dim * n1,
            Field::U | Field::B => dim * nk,
            Field::N => curl_components(dim) * n1,
            Field::A => dim * n1,
            Field::T => nk,
            Field::P | Field::R => n1,
            Field::UHat(_) | Field::BHat(_) => dim * mf,
            Field::THat(_) | Field::PHat(_) | Field::RHat(_) => mf,
        }
    }

    pub fn facet(&self) -> Option<usize> {
        match *self {
            Field::UHat(l) | Field::BHat(l) | Field::THat(l) | Field::PHat(l) | Field::RHat(l) => Some(l),
            _ => None,
        }
    }
}

/// The form a block or load entry came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Form {
    /// `Ha^2 (L, J)`
    VelocityFluxMass,
    /// `a_1h`
    VelocityMixed,
    /// `Rm^2 (N, I)`
    MagneticFluxMass,
    /// `a_2h`
    MagneticMixed,
    /// `Pr Re (A, E)`
    ThermalFluxMass,
    /// `a_3h`
    ThermalMixed,
    VelocityStabilization,
    MagneticStabilization,
    ThermalStabilization,
    /// `b_1h`
    Pressure,
    /// `b_2h`
    PseudoPressure,
    /// `c_1h`
    Convection,
    /// `c_2h`, both placements
    LorentzInduction,
    /// `c_3h`
    ThermalConvection,
    /// `G_3h`
    Buoyancy,
    Load,
}

#[derive(Debug, Clone)]
pub struct BlockEntry {
    pub form: Form,
    pub row: Field,
    pub col: Field,
    pub matrix: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct LoadEntry {
    pub form: Form,
    pub row: Field,
    pub vector: DVector<f64>,
}

/// Dense local blocks keyed by (row field, column field) plus a local load.
#[derive(Debug, Clone)]
pub struct LocalBlocks {
    pub dim: usize,
    pub k: usize,
    pub entries: Vec<BlockEntry>,
    pub loads: Vec<LoadEntry>,
}

impl LocalBlocks {
    pub fn new(dim: usize, k: usize) -> Self {
        Self { dim, k, entries: Vec::new(), loads: Vec::new() }
    }

    pub fn zeros(&self, row: Field, col: Field) -> DMatrix<f64> {
        DMatrix::zeros(row.size(self.dim, self.k), col.size(self.dim, self.k))
    }

    pub fn push(&mut self, form: Form, row: Field, col: Field, matrix: DMatrix<f64>) {
        debug_assert_eq!(matrix.nrows(), row.size(self.dim, self.k));
        debug_assert_eq!(matrix.ncols(), col.size(self.dim, self.k));
        self.entries.push(BlockEntry { form, row, col, matrix });
    }

    /// Pushes `m` at (row, col) and `sign * m^T` at (col, row).
    pub fn push_pair(&mut self, form: Form, row: Field, col: Field, matrix: DMatrix<f64>, sign: f64) {
        let t = matrix.transpose() * sign;
        self.push(form, row, col, matrix);
        self.push(form, col, row, t);
    }

    pub fn push_load(&mut self, form: Form, row: Field, vector: DVector<f64>) {
        debug_assert_eq!(vector.len(), row.size(self.dim, self.k));
        self.loads.push(LoadEntry { form, row, vector });
    }

    pub fn extend(&mut self, other: LocalBlocks) {
        self.entries.extend(other.entries);
        self.loads.extend(other.loads);
    }

    /// Sum of all entries at (row, col), if any exist.
    pub fn block(&self, row: Field, col: Field) -> Option<DMatrix<f64>> {
        let mut out: Option<DMatrix<f64>> = None;
        for e in self.entries.iter().filter(|e| e.row == row && e.col == col) {
            match out.as_mut() {
                Some(m) => *m += &e.matrix,
                None => out = Some(e.matrix.clone()),
            }
        }
        out
    }

    /// Like [`block`](Self::block) but restricted to one form.
    pub fn form_block(&self, form: Form, row: Field, col: Field) -> Option<DMatrix<f64>> {
        let mut out: Option<DMatrix<f64>> = None;
        for e in self.entries.iter().filter(|e| e.form == form && e.row == row && e.col == col) {
            match out.as_mut() {
                Some(m) => *m += &e.matrix,
                None => out = Some(e.matrix.clone()),
            }
        }
        out
    }

    pub fn load(&self, row: Field) -> DVector<f64> {
        let mut v = DVector::zeros(row.size(self.dim, self.k));
        for e in self.loads.iter().filter(|e| e.row == row) {
            v += &e.vector;
        }
        v
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.matrix.iter().all(|v| *v == 0.0))
            && self.loads.iter().all(|e| e.vector.iter().all(|v| *v == 0.0))
    }
}

/// Volume source terms of the momentum, induction and energy equations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SourceTerms {
    pub f1: [f64; 3],
    pub f2: [f64; 3],
    pub f3: f64,
}

/// Values of the trace fields on the boundary.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BoundaryValues {
    pub u: [f64; 3],
    pub b: [f64; 3],
    pub t: f64,
    pub r: f64,
}

/// Data of one boundary value problem.
pub trait ProblemData: Sync {
    fn source(&self, x: &Point) -> SourceTerms;

    /// Non-homogeneous boundary traces. The default is homogeneous data.
    fn boundary_values(&self, _x: &Point) -> Option<BoundaryValues> {
        None
    }

    fn has_boundary_data(&self) -> bool {
        false
    }
}

/// Zero forcing with homogeneous boundary conditions.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroData;

impl ProblemData for ZeroData {
    fn source(&self, _x: &Point) -> SourceTerms {
        SourceTerms::default()
    }
}

/// Number of components of a curl in `dim` dimensions (`2d - 3`).
pub fn curl_components(dim: usize) -> usize {
    2 * dim - 3
}

/// `a x b`; in 2D the scalar `a1 b2 - a2 b1` is stored in component 0.
pub fn cross(dim: usize, a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    if dim == 2 {
        [a[0] * b[1] - a[1] * b[0], 0.0, 0.0]
    } else {
        [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    }
}

/// Curl of a field with `curl_components(dim)` components given its Jacobian
/// `jac[c][m] = d_m X_c`. In 2D this is `(d_y X, -d_x X)`.
pub fn curl_of_curl_space(dim: usize, jac: &[[f64; 3]; 3]) -> [f64; 3] {
    if dim == 2 {
        [jac[0][1], -jac[0][0], 0.0]
    } else {
        curl_3d(jac)
    }
}

/// Curl of a vector field given its Jacobian; in 2D the scalar curl is
/// stored in component 0.
pub fn curl_of_vector(dim: usize, jac: &[[f64; 3]; 3]) -> [f64; 3] {
    if dim == 2 {
        [jac[1][0] - jac[0][1], 0.0, 0.0]
    } else {
        curl_3d(jac)
    }
}

fn curl_3d(j: &[[f64; 3]; 3]) -> [f64; 3] {
    [j[2][1] - j[1][2], j[0][2] - j[2][0], j[1][0] - j[0][1]]
}

pub(crate) fn dot(dim: usize, a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..dim).map(|c| a[c] * b[c]).sum()
}

/// Reference bases and quadrature rules shared by all elements.
#[derive(Debug, Clone)]
pub struct ReferenceData {
    pub dim: usize,
    pub k: usize,
    pub element_basis: PolynomialBasis,
    pub facet_basis: PolynomialBasis,
    pub element_rule: QuadratureRule,
    pub facet_rule: QuadratureRule,
}

impl ReferenceData {
    /// Bases of degree `k` with rules of the given order.
    pub fn new(dim: usize, k: usize, order: usize) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(invalid(format!("mesh dimension must be 2 or 3, got {dim}")));
        }
        if k == 0 {
            return Err(invalid("polynomial degree k must be at least 1"));
        }
        Ok(Self {
            dim,
            k,
            element_basis: make_basis(dim, k)?,
            facet_basis: make_basis(dim - 1, k)?,
            element_rule: make_quadrature(dim, order)?,
            facet_rule: make_quadrature(dim - 1, order)?,
        })
    }

    /// Rule of order `2k + 2` for bilinear forms.
    pub fn bilinear(dim: usize, k: usize) -> Result<Self> {
        Self::new(dim, k, 2 * k + 2)
    }

    /// Rule of order `3k + 2` for trilinear forms.
    pub fn trilinear(dim: usize, k: usize) -> Result<Self> {
        Self::new(dim, k, 3 * k + 2)
    }
}

#[derive(Debug, Clone)]
pub struct QuadPoint {
    pub x: Point,
    /// Physical weight.
    pub w: f64,
    /// Element basis of degree `k`; the first `n1` entries span `P_{k-1}`.
    pub phi: Vec<f64>,
    pub grad: Vec<[f64; 3]>,
}

#[derive(Debug, Clone)]
pub struct FacetPoint {
    pub x: Point,
    pub w: f64,
    pub phi: Vec<f64>,
    /// Facet basis of degree `k`.
    pub psi: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FacetData {
    pub facet: usize,
    /// Unit normal pointing out of this element.
    pub normal: Point,
    /// Orthonormal frame of the global facet: its fixed normal, then tangents.
    pub frame: [Point; 3],
    pub area: f64,
    pub boundary: bool,
    pub points: Vec<FacetPoint>,
}

/// Basis values, weights and normals of one element at its quadrature points.
#[derive(Debug, Clone)]
pub struct ElementContext {
    pub dim: usize,
    pub k: usize,
    pub element: usize,
    pub nk: usize,
    pub n1: usize,
    pub mf: usize,
    pub volume: f64,
    pub h: f64,
    pub tau: f64,
    pub points: Vec<QuadPoint>,
    pub facets: Vec<FacetData>,
}

/// Normal and tangent frame of a global facet.
///
/// The normal points out of the first adjacent element. In 3D the first
/// tangent follows the edge between the two smallest vertex ids.
pub fn facet_frame(mesh: &SimplicialMesh, facet: usize) -> Result<[Point; 3]> {
    let first = mesh.facet_neighbors(facet).first;
    let n = mesh.element_geometry(first.element)?.outward_normals[first.local];
    if mesh.dim() == 2 {
        return Ok([n, [-n[1], n[0], 0.0], [0.0; 3]]);
    }
    let v = mesh.facet(facet);
    let (a, b) = (mesh.vertex(v[0]), mesh.vertex(v[1]));
    let mut t1 = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let len = dot(3, &t1, &t1).sqrt();
    t1.iter_mut().for_each(|c| *c /= len);
    let t2 = cross(3, &n, &t1);
    Ok([n, t1, t2])
}

impl ElementContext {
    pub fn new(mesh: &SimplicialMesh, element: usize, reference: &ReferenceData) -> Result<Self> {
        let dim = mesh.dim();
        if dim != reference.dim {
            return Err(invalid("reference data dimension does not match the mesh"));
        }
        let k = reference.k;
        let geo = mesh.element_geometry(element)?;
        let basis = PhysicalBasis::from_parts(reference.element_basis.clone(), geo.affine_map);
        let det = geo.affine_map.det.abs();
        let points = reference
            .element_rule
            .points
            .iter()
            .zip(&reference.element_rule.weights)
            .map(|(xi, w)| QuadPoint { x: geo.affine_map.apply(xi), w: w * det, phi: basis.eval_ref(xi), grad: basis.grad_ref(xi) })
            .collect();
        let mut facets = Vec::with_capacity(dim + 1);
        for (l, &f) in mesh.element_facets(element).iter().enumerate() {
            let verts: Vec<Point> = mesh.facet(f).iter().map(|&v| *mesh.vertex(v)).collect();
            let patch = FacetPatch::from_vertices(dim, &verts, reference.facet_basis.clone())?;
            let points = reference
                .facet_rule
                .points
                .iter()
                .zip(&reference.facet_rule.weights)
                .map(|(s, w)| {
                    let x = patch.point(s);
                    FacetPoint { x, w: w * patch.jacobian, phi: basis.eval(&x), psi: patch.eval(s) }
                })
                .collect();
            facets.push(FacetData {
                facet: f,
                normal: geo.outward_normals[l],
                frame: facet_frame(mesh, f)?,
                area: geo.facet_areas[l],
                boundary: mesh.is_boundary_facet(f),
                points,
            });
        }
        Ok(Self {
            dim,
            k,
            element,
            nk: poly_dim(dim, k),
            n1: poly_dim(dim, k - 1),
            mf: poly_dim(dim - 1, k),
            volume: geo.volume,
            h: geo.diameter,
            tau: 1.0 / geo.diameter,
            points,
            facets,
        })
    }

    pub fn blocks(&self) -> LocalBlocks {
        LocalBlocks::new(self.dim, self.k)
    }
}
