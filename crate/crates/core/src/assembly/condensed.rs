//! Oseen step solved by block elimination and static condensation.
//!
//! With the advecting fields frozen, the magnetic and thermal equations do
//! not involve the velocity, so one Oseen system is block triangular: the
//! magnetic block is solved first, then the thermal block, then the fluid
//! block with the other two moved to the right-hand side. Within each block
//! the element unknowns are eliminated locally and only the facet unknowns
//! enter a global sparse solve.
//!
//! The multiplier row of the mean-zero pressure condition would couple every
//! facet unknown after condensation. Instead one pressure trace coefficient
//! is pinned and the pressure pair is shifted by a constant afterwards, which
//! gives the same `(p_h, p^_h)` as the multiplier formulation with a zero
//! multiplier.

use faer::sparse::Triplet;
use nalgebra::{DMatrix, DVector};

use super::dofmap::StateVector;
use super::solve::solve_sparse;
use super::system::{OseenAssembler, SparseSystem};
use crate::error::{Error, Result};
use crate::forms::{Field, LocalBlocks};

/// Unknowns solved together in one block of a segregated Oseen step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    Magnetic,
    Thermal,
    Fluid,
}

impl Subsystem {
    /// Solve order; each block may only depend on earlier ones.
    pub const ORDER: [Subsystem; 3] = [Subsystem::Magnetic, Subsystem::Thermal, Subsystem::Fluid];

    pub fn of(field: Field) -> Subsystem {
        match field {
            Field::L | Field::U | Field::P | Field::UHat(_) | Field::PHat(_) => Subsystem::Fluid,
            Field::N | Field::B | Field::R | Field::BHat(_) | Field::RHat(_) => Subsystem::Magnetic,
            Field::A | Field::T | Field::THat(_) => Subsystem::Thermal,
        }
    }

    fn rank(self) -> usize {
        Self::ORDER.iter().position(|s| *s == self).unwrap_or(0)
    }

    fn interior(self) -> &'static [Field] {
        match self {
            Subsystem::Fluid => &[Field::L, Field::U, Field::P],
            Subsystem::Magnetic => &[Field::N, Field::B, Field::R],
            Subsystem::Thermal => &[Field::A, Field::T],
        }
    }

    fn traces(self, l: usize) -> Vec<Field> {
        match self {
            Subsystem::Fluid => vec![Field::UHat(l), Field::PHat(l)],
            Subsystem::Magnetic => vec![Field::BHat(l), Field::RHat(l)],
            Subsystem::Thermal => vec![Field::THat(l)],
        }
    }
}

/// Local numbering of one element within one subsystem.
struct LocalLayout {
    /// (field, local offset, global range start)
    fields: Vec<(Field, usize, usize)>,
    n_interior: usize,
    /// Global index of every local trace unknown.
    trace_globals: Vec<usize>,
}

impl LocalLayout {
    fn new(asm: &OseenAssembler<'_>, e: usize, s: Subsystem) -> Self {
        let map = asm.map();
        let mesh = asm.mesh();
        let (dim, k) = (map.dim, map.k);
        let mut fields = Vec::new();
        let mut off = 0;
        for &f in s.interior() {
            fields.push((f, off, map.interior_range(e, f).start));
            off += f.size(dim, k);
        }
        let n_interior = off;
        let mut trace_globals = Vec::new();
        for l in 0..dim + 1 {
            for f in s.traces(l) {
                let r = map.field_range(mesh, e, f);
                fields.push((f, off, r.start));
                off += r.len();
                trace_globals.extend(r);
            }
        }
        Self { fields, n_interior, trace_globals }
    }

    fn offset(&self, f: Field) -> Option<(usize, usize)> {
        self.fields.iter().find(|(g, _, _)| *g == f).map(|&(_, o, start)| (o, start))
    }

    fn size(&self) -> usize {
        self.n_interior + self.trace_globals.len()
    }
}

/// Element data kept between condensation and recovery:
/// `x_I = z_rhs - z_mat x_T`.
struct Recovery {
    z_mat: DMatrix<f64>,
    z_rhs: DVector<f64>,
}

/// Solves one Oseen step; returns the new state and the largest relative
/// residual of the three block solves.
pub(crate) fn solve_segregated(asm: &OseenAssembler<'_>, prev: &StateVector) -> Result<(Vec<f64>, f64)> {
    let map = asm.map().clone();
    let mesh = asm.mesh();
    let dim = map.dim;
    let ne = mesh.num_elements();
    let zero_flow = prev.values.iter().all(|v| *v == 0.0);
    let mut x = vec![0.0; map.total];
    for (i, fixed) in map.fixed.iter().enumerate() {
        if *fixed {
            x[i] = asm.fixed_values[i];
        }
    }
    let mut residual: f64 = 0.0;
    for s in Subsystem::ORDER {
        // Compact numbering of the free global unknowns of this block.
        let pinned = match (s, map.gauge) {
            (Subsystem::Fluid, Some(_)) => Some(map.trace_range(0, Field::PHat(0)).start),
            _ => None,
        };
        let mut compact = vec![usize::MAX; map.total];
        let mut n = 0;
        for f in 0..mesh.num_facets() {
            for t in s.traces(0) {
                for i in map.trace_range(f, t) {
                    if !map.fixed[i] && Some(i) != pinned {
                        compact[i] = n;
                        n += 1;
                    }
                }
            }
        }
        let mut rhs = vec![0.0; n];
        for (i, c) in compact.iter().enumerate() {
            if *c != usize::MAX {
                rhs[*c] += asm.trace_rhs[i];
            }
        }
        let mut triplets: Vec<Triplet<usize, usize, f64>> = Vec::new();
        let mut recovery = Vec::with_capacity(ne);
        let mut gauges = Vec::new();
        for e in 0..ne {
            let (mut blocks, gauge) = asm.linear_blocks(e)?;
            if s == Subsystem::Fluid {
                gauges.push(gauge);
            }
            if !zero_flow {
                blocks.extend(asm.convection_blocks(e, prev)?);
            }
            let layout = LocalLayout::new(asm, e, s);
            let (kmat, kvec) = local_system(asm, &blocks, &layout, s, &x, e)?;
            let ni = layout.n_interior;
            let nt = layout.trace_globals.len();
            let a_ii = kmat.view((0, 0), (ni, ni)).into_owned();
            let a_it = kmat.view((0, ni), (ni, nt));
            let a_ti = kmat.view((ni, 0), (nt, ni));
            let a_tt = kmat.view((ni, ni), (nt, nt));
            let lu = a_ii.lu();
            let z_mat = lu
                .solve(&a_it.into_owned())
                .ok_or_else(|| Error::SingularSystem(format!("element {e}: local block of {s:?} unknowns is singular")))?;
            let z_rhs = lu
                .solve(&kvec.rows(0, ni).into_owned())
                .ok_or_else(|| Error::SingularSystem(format!("element {e}: local block of {s:?} unknowns is singular")))?;
            let schur = a_tt - a_ti * &z_mat;
            let g = kvec.rows(ni, nt) - a_ti * &z_rhs;
            for (a, &ga) in layout.trace_globals.iter().enumerate() {
                let ra = compact[ga];
                if ra == usize::MAX {
                    continue;
                }
                rhs[ra] += g[a];
                for (b, &gb) in layout.trace_globals.iter().enumerate() {
                    let v = schur[(a, b)];
                    if v == 0.0 {
                        continue;
                    }
                    let cb = compact[gb];
                    if cb == usize::MAX {
                        rhs[ra] -= v * x[gb];
                    } else {
                        triplets.push(Triplet::new(ra, cb, v));
                    }
                }
            }
            recovery.push(Recovery { z_mat, z_rhs });
        }
        let system = SparseSystem::from_faer_triplets(None, n, &triplets, rhs)?;
        drop(triplets);
        let sol = solve_sparse(&system)?;
        drop(system);
        residual = residual.max(sol.relative_residual);
        for (i, c) in compact.iter().enumerate() {
            if *c != usize::MAX {
                x[i] = sol.x[*c];
            }
        }
        for (e, rec) in recovery.iter().enumerate() {
            let layout = LocalLayout::new(asm, e, s);
            let xt = DVector::from_iterator(layout.trace_globals.len(), layout.trace_globals.iter().map(|&g| x[g]));
            let xi = &rec.z_rhs - &rec.z_mat * xt;
            for &(f, off, start) in &layout.fields {
                if f.facet().is_some() {
                    continue;
                }
                for j in 0..f.size(dim, map.k) {
                    x[start + j] = xi[off + j];
                }
            }
        }
        if let Some(g) = pinned.and(map.gauge) {
            remove_pressure_mean(asm, &gauges, &mut x)?;
            x[g] = 0.0;
        }
    }
    Ok((x, residual))
}

/// Shifts `p_h` and `p^_h` by the constant that makes `(p_h, 1) = 0`.
///
/// `gauges[e][a] = (phi_a, 1)_K`; with an orthonormal basis these are also
/// the coefficients of the constant one.
fn remove_pressure_mean(asm: &OseenAssembler<'_>, gauges: &[Vec<f64>], x: &mut [f64]) -> Result<()> {
    let map = asm.map();
    let mesh = asm.mesh();
    let (mut integral, mut volume) = (0.0, 0.0);
    for (e, g) in gauges.iter().enumerate() {
        let r = map.interior_range(e, Field::P);
        integral += g.iter().zip(&x[r]).map(|(a, b)| a * b).sum::<f64>();
        volume += g.iter().map(|a| a * a).sum::<f64>();
    }
    let mean = integral / volume;
    for (e, g) in gauges.iter().enumerate() {
        for (i, c) in map.interior_range(e, Field::P).zip(g) {
            x[i] -= mean * c;
        }
    }
    let dim = mesh.dim();
    let rule = crate::basis::make_quadrature(dim - 1, map.k)?;
    for f in 0..mesh.num_facets() {
        let patch = crate::basis::FacetPatch::new(mesh, f, map.k)?;
        let mut ones = vec![0.0; patch.size()];
        for (s, w) in rule.points.iter().zip(&rule.weights) {
            for (o, v) in ones.iter_mut().zip(patch.eval(s)) {
                *o += w * patch.jacobian * v;
            }
        }
        for (i, c) in map.trace_range(f, Field::PHat(0)).zip(ones) {
            x[i] -= mean * c;
        }
    }
    Ok(())
}

/// Dense element matrix and right-hand side of subsystem `s`, with unknowns
/// of earlier subsystems taken from `x`.
fn local_system(
    asm: &OseenAssembler<'_>,
    blocks: &LocalBlocks,
    layout: &LocalLayout,
    s: Subsystem,
    x: &[f64],
    e: usize,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let size = layout.size();
    let mut kmat = DMatrix::<f64>::zeros(size, size);
    let mut kvec = DVector::<f64>::zeros(size);
    for entry in &blocks.entries {
        if Subsystem::of(entry.row) != s {
            continue;
        }
        let (ro, _) = layout.offset(entry.row).expect("row field in layout");
        let (nr, nc) = entry.matrix.shape();
        let cs = Subsystem::of(entry.col);
        if cs == s {
            let (co, _) = layout.offset(entry.col).expect("column field in layout");
            let mut v = kmat.view_mut((ro, co), (nr, nc));
            v += &entry.matrix;
        } else if cs.rank() < s.rank() {
            let start = asm.map().field_range(asm.mesh(), e, entry.col).start;
            for a in 0..nr {
                let mut acc = 0.0;
                for b in 0..nc {
                    acc += entry.matrix[(a, b)] * x[start + b];
                }
                kvec[ro + a] -= acc;
            }
        } else if entry.matrix.iter().any(|v| *v != 0.0) {
            return Err(Error::Internal(format!(
                "element {e}: {:?} rows couple to {:?}, which is solved later",
                entry.row, entry.col
            )));
        }
    }
    for load in &blocks.loads {
        if Subsystem::of(load.row) == s {
            let (ro, _) = layout.offset(load.row).expect("load field in layout");
            let mut v = kvec.rows_mut(ro, load.vector.len());
            v += &load.vector;
        }
    }
    Ok((kmat, kvec))
}
