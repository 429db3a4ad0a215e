use std::sync::Arc;

use faer::sparse::{SparseColMat, Triplet};

use super::dofmap::{build_dofmap, DofMap, StateVector};
use crate::error::{invalid, Error, Result};
use crate::forms::{
    local_buoyancy_block, local_constraint_block, local_convection_blocks, local_load, local_mixed_flux_block,
    local_stabilization_block, ConstraintKind, ElementContext, Field, LocalBlocks, Physics, PrevIterate, ProblemData,
    ReferenceData,
};
use crate::mesh::SimplicialMesh;
use crate::params::PhysicalParameters;

/// Square sparse system in compressed-column form.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub map: Option<Arc<DofMap>>,
    pub matrix: SparseColMat<usize, f64>,
    pub rhs: Vec<f64>,
}

impl SparseSystem {
    /// Builds a system from `(row, col, value)` entries; duplicates are summed.
    pub fn from_triplets(n: usize, entries: &[(usize, usize, f64)], rhs: Vec<f64>) -> Result<Self> {
        let t: Vec<Triplet<usize, usize, f64>> = entries.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
        Self::from_faer_triplets(None, n, &t, rhs)
    }

    pub(crate) fn from_faer_triplets(
        map: Option<Arc<DofMap>>,
        n: usize,
        entries: &[Triplet<usize, usize, f64>],
        rhs: Vec<f64>,
    ) -> Result<Self> {
        if rhs.len() != n {
            return Err(invalid(format!("right-hand side has length {}, expected {n}", rhs.len())));
        }
        let matrix = SparseColMat::try_new_from_triplets(n, n, entries)
            .map_err(|e| invalid(format!("could not build sparse matrix: {e:?}")))?;
        Ok(Self { map, matrix, rhs })
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    pub fn nnz(&self) -> usize {
        self.matrix.compute_nnz()
    }

    /// `A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        let m = self.matrix.as_ref();
        let (cp, ri, val) = (m.col_ptr(), m.row_idx(), m.val());
        for j in 0..self.dim() {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for p in cp[j]..cp[j + 1] {
                y[ri[p]] += val[p] * xj;
            }
        }
        y
    }

    /// `A^T x`.
    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        let m = self.matrix.as_ref();
        let (cp, ri, val) = (m.col_ptr(), m.row_idx(), m.val());
        (0..self.dim()).map(|j| (cp[j]..cp[j + 1]).map(|p| val[p] * x[ri[p]]).sum()).collect()
    }

    /// Entry `(i, j)`, zero when not stored.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let m = self.matrix.as_ref();
        let (cp, ri, val) = (m.col_ptr(), m.row_idx(), m.val());
        (cp[j]..cp[j + 1]).filter(|&p| ri[p] == i).map(|p| val[p]).sum()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let m = self.matrix.as_ref();
        let mut rows = vec![0.0f64; self.dim()];
        for (r, v) in m.row_idx().iter().zip(m.val()) {
            rows[*r] += v.abs();
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let m = self.matrix.as_ref();
        let cp = m.col_ptr();
        (0..self.dim()).map(|j| m.val()[cp[j]..cp[j + 1]].iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }
}

/// Builds the Oseen system repeatedly for one mesh, degree and data set.
///
/// Everything independent of the previous iterate (all bilinear forms, the
/// load, essential conditions and the pressure gauge) is assembled once.
pub struct OseenAssembler<'a> {
    mesh: &'a SimplicialMesh,
    data: &'a dyn ProblemData,
    params: PhysicalParameters,
    map: Arc<DofMap>,
    bilinear: ReferenceData,
    trilinear: ReferenceData,
    pub(crate) fixed_values: Vec<f64>,
    /// Boundary contributions to trace rows, part of `base_rhs`.
    pub(crate) trace_rhs: Vec<f64>,
    base: Vec<Triplet<usize, usize, f64>>,
    base_rhs: Vec<f64>,
}

impl<'a> OseenAssembler<'a> {
    pub fn new(mesh: &'a SimplicialMesh, k: usize, params: &PhysicalParameters, data: &'a dyn ProblemData) -> Result<Self> {
        Self::with_map(mesh, Arc::new(build_dofmap(mesh, k)?), params, data)
    }

    pub fn with_map(
        mesh: &'a SimplicialMesh,
        map: Arc<DofMap>,
        params: &PhysicalParameters,
        data: &'a dyn ProblemData,
    ) -> Result<Self> {
        params.validate()?;
        let k = map.k;
        let dim = mesh.dim();
        if map.num_elements != mesh.num_elements() || map.num_facets != mesh.num_facets() || map.dim != dim {
            return Err(invalid("dof map does not belong to this mesh"));
        }
        let bilinear = ReferenceData::bilinear(dim, k)?;
        let trilinear = ReferenceData::trilinear(dim, k)?;
        let mut asm = Self {
            mesh,
            data,
            params: *params,
            map: map.clone(),
            bilinear,
            trilinear,
            fixed_values: vec![0.0; map.total],
            trace_rhs: vec![0.0; map.total],
            base: Vec::new(),
            base_rhs: vec![0.0; map.total],
        };
        if data.has_boundary_data() {
            asm.boundary_traces()?;
        }
        let mut triplets = Vec::new();
        let mut rhs = vec![0.0; map.total];
        for e in 0..mesh.num_elements() {
            let (blocks, gauge) = asm.linear_blocks(e)?;
            asm.scatter(e, &blocks, &mut triplets, &mut rhs);
            if let Some(g) = map.gauge {
                for (i, c) in map.interior_range(e, Field::P).zip(gauge) {
                    triplets.push(Triplet::new(i, g, c));
                    triplets.push(Triplet::new(g, i, c));
                }
            }
        }
        for (i, fixed) in map.fixed.iter().enumerate() {
            if *fixed {
                triplets.push(Triplet::new(i, i, 1.0));
                rhs[i] = asm.fixed_values[i];
            }
        }
        for (r, b) in rhs.iter_mut().zip(&asm.trace_rhs) {
            *r += b;
        }
        asm.base = triplets;
        asm.base_rhs = rhs;
        Ok(asm)
    }

    pub fn map(&self) -> &Arc<DofMap> {
        &self.map
    }

    pub fn mesh(&self) -> &'a SimplicialMesh {
        self.mesh
    }

    /// All iterate-independent blocks and loads of element `e`, plus the
    /// gauge coefficients `(phi_a, 1)` of its pressure basis.
    pub fn linear_blocks(&self, e: usize) -> Result<(LocalBlocks, Vec<f64>)> {
        let ctx = ElementContext::new(self.mesh, e, &self.bilinear)?;
        let params = &self.params;
        let mut blocks = ctx.blocks();
        for ph in [Physics::Velocity, Physics::Magnetic, Physics::Thermal] {
            blocks.extend(local_mixed_flux_block(ph, &ctx, params));
            blocks.extend(local_stabilization_block(ph, &ctx, params));
        }
        blocks.extend(local_constraint_block(ConstraintKind::Pressure, &ctx, params));
        blocks.extend(local_constraint_block(ConstraintKind::PseudoPressure, &ctx, params));
        blocks.extend(local_buoyancy_block(&ctx, params));
        blocks.extend(local_load(&ctx, self.data, params));
        let gauge = (0..ctx.n1).map(|a| ctx.points.iter().map(|q| q.w * q.phi[a]).sum()).collect();
        Ok((blocks, gauge))
    }

    /// Projects prescribed boundary traces and records the boundary normal
    /// flux in the `p^` rows.
    fn boundary_traces(&mut self) -> Result<()> {
        let (reference, data) = (&self.bilinear, self.data);
        let dim = self.mesh.dim();
        let mf = crate::basis::poly_dim(dim - 1, self.map.k);
        for f in 0..self.mesh.num_facets() {
            if !self.mesh.is_boundary_facet(f) {
                continue;
            }
            let side = self.mesh.facet_neighbors(f).first;
            let ctx = ElementContext::new(self.mesh, side.element, reference)?;
            let fd = &ctx.facets[side.local];
            // Orthonormal facet basis: projections are plain moments.
            let mut u = vec![0.0; dim * mf];
            let mut b = vec![0.0; dim * mf];
            let mut t = vec![0.0; mf];
            let mut r = vec![0.0; mf];
            let mut flux = vec![0.0; mf];
            for p in &fd.points {
                let v = data.boundary_values(&p.x).unwrap_or_default();
                let un: f64 = (0..dim).map(|c| v.u[c] * fd.normal[c]).sum();
                for m in 0..mf {
                    let wp = p.w * p.psi[m];
                    for c in 0..dim {
                        u[c * mf + m] += wp * v.u[c];
                        let bt: f64 = (0..dim).map(|i| v.b[i] * fd.frame[c][i]).sum();
                        b[c * mf + m] += wp * bt;
                    }
                    t[m] += wp * v.t;
                    r[m] += wp * v.r;
                    flux[m] += wp * un;
                }
            }
            for c in 0..mf {
                // Normal component of B^ stays zero.
                b[c] = 0.0;
            }
            let m = &self.map;
            for (field, vals) in [(Field::UHat(0), &u), (Field::BHat(0), &b), (Field::THat(0), &t), (Field::RHat(0), &r)] {
                for (i, v) in m.trace_range(f, field).zip(vals.iter()) {
                    self.fixed_values[i] = *v;
                }
            }
            for (i, v) in m.trace_range(f, Field::PHat(0)).zip(flux) {
                self.trace_rhs[i] -= v;
            }
        }
        Ok(())
    }

    /// Global index of every local unknown of element `e`: interior fields,
    /// then the five traces of each local facet.
    fn local_to_global(&self, e: usize, field: Field) -> std::ops::Range<usize> {
        self.map.field_range(self.mesh, e, field)
    }

    fn scatter(&self, e: usize, blocks: &LocalBlocks, triplets: &mut Vec<Triplet<usize, usize, f64>>, rhs: &mut [f64]) {
        let fixed = &self.map.fixed;
        for entry in &blocks.entries {
            let rows = self.local_to_global(e, entry.row);
            let cols = self.local_to_global(e, entry.col);
            for (a, gr) in rows.clone().enumerate() {
                if fixed[gr] {
                    continue;
                }
                for (b, gc) in cols.clone().enumerate() {
                    let v = entry.matrix[(a, b)];
                    if v == 0.0 {
                        continue;
                    }
                    if fixed[gc] {
                        rhs[gr] -= v * self.fixed_values[gc];
                    } else {
                        triplets.push(Triplet::new(gr, gc, v));
                    }
                }
            }
        }
        for load in &blocks.loads {
            for (a, gr) in self.local_to_global(e, load.row).enumerate() {
                if !fixed[gr] {
                    rhs[gr] += load.vector[a];
                }
            }
        }
    }

    /// Convective blocks of element `e` for the previous iterate.
    pub fn convection_blocks(&self, e: usize, prev: &StateVector) -> Result<LocalBlocks> {
        let ctx = ElementContext::new(self.mesh, e, &self.trilinear)?;
        let u_hat: Vec<&[f64]> = self.mesh.element_facets(e).iter().map(|&f| prev.trace(f, Field::UHat(0))).collect();
        let local = PrevIterate { u: prev.interior(e, Field::U), b: prev.interior(e, Field::B), u_hat };
        Ok(local_convection_blocks(&local, &ctx, &self.params))
    }

    /// System of one Oseen step linearised at `prev`.
    pub fn assemble(&self, prev: &StateVector) -> Result<SparseSystem> {
        if prev.values.len() != self.map.total {
            return Err(invalid(format!(
                "previous iterate has {} entries, expected {}",
                prev.values.len(),
                self.map.total
            )));
        }
        let mut triplets = self.base.clone();
        let mut rhs = self.base_rhs.clone();
        let zero_flow = prev.values.iter().all(|v| *v == 0.0);
        if !zero_flow {
            for e in 0..self.mesh.num_elements() {
                let blocks = self.convection_blocks(e, prev)?;
                self.scatter(e, &blocks, &mut triplets, &mut rhs);
            }
        }
        SparseSystem::from_faer_triplets(Some(self.map.clone()), self.map.total, &triplets, rhs)
    }
}

/// Assembles the Oseen system linearised at `prev`.
pub fn assemble_oseen(
    mesh: &SimplicialMesh,
    k: usize,
    params: &PhysicalParameters,
    prev: &StateVector,
    data: &dyn ProblemData,
) -> Result<SparseSystem> {
    if prev.map.k != k {
        return Err(Error::InvalidArgument(format!("previous iterate has degree {}, expected {k}", prev.map.k)));
    }
    OseenAssembler::with_map(mesh, prev.map.clone(), params, data)?.assemble(prev)
}
