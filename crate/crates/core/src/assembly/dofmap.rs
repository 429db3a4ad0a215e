use std::ops::Range;
use std::sync::Arc;

use crate::basis::poly_dim;
use crate::error::{invalid, Result};
use crate::forms::{curl_components, Field};
use crate::mesh::SimplicialMesh;

/// Global numbering of all unknowns.
///
/// Element `e` owns the contiguous range `e * interior_size ..` holding
/// `L, u, N, B, A, T, p, r` in that order. Facet `f` owns the range
/// `interior_total + f * facet_size ..` holding `u^, B^, T^, p^, r^`. The last
/// index is the multiplier enforcing `(p, 1) = 0`.
///
/// `B^` is stored in the facet frame `(n_e, t_1, t_2)`. Its normal component
/// enters no form and is fixed to zero on every facet.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub dim: usize,
    pub k: usize,
    pub num_elements: usize,
    pub num_facets: usize,
    pub interior_size: usize,
    pub facet_size: usize,
    interior_offsets: [usize; 8],
    trace_offsets: [usize; 5],
    /// Essential (eliminated) unknowns.
    pub fixed: Vec<bool>,
    pub gauge: Option<usize>,
    pub total: usize,
}

fn interior_slot(field: Field) -> Option<usize> {
    Field::INTERIOR.iter().position(|f| *f == field)
}

fn trace_slot(field: Field) -> Option<usize> {
    match field {
        Field::UHat(_) => Some(0),
        Field::BHat(_) => Some(1),
        Field::THat(_) => Some(2),
        Field::PHat(_) => Some(3),
        Field::RHat(_) => Some(4),
        _ => None,
    }
}

/// Numbers every unknown of the scheme with degree `k` on `mesh`.
pub fn build_dofmap(mesh: &SimplicialMesh, k: usize) -> Result<DofMap> {
    build_dofmap_with_gauge(mesh, k, true)
}

/// As [`build_dofmap`], optionally without the pressure multiplier. Without
/// it the pressure is determined only up to a constant.
pub fn build_dofmap_with_gauge(mesh: &SimplicialMesh, k: usize, gauge: bool) -> Result<DofMap> {
    if k == 0 {
        return Err(invalid("polynomial degree k must be at least 1"));
    }
    let dim = mesh.dim();
    if poly_dim(dim, k) == 0 || k > crate::basis::MAX_BASIS_DEGREE {
        return Err(invalid(format!("polynomial degree {k} is too large")));
    }
    let mut interior_offsets = [0; 8];
    let mut acc = 0;
    for (i, f) in Field::INTERIOR.iter().enumerate() {
        interior_offsets[i] = acc;
        acc += f.size(dim, k);
    }
    let interior_size = acc;
    let mut trace_offsets = [0; 5];
    acc = 0;
    for (i, f) in Field::traces(0).iter().enumerate() {
        trace_offsets[i] = acc;
        acc += f.size(dim, k);
    }
    let facet_size = acc;
    let ne = mesh.num_elements();
    let nf = mesh.num_facets();
    let interior_total = ne * interior_size;
    let total = interior_total + nf * facet_size + usize::from(gauge);
    let mut map = DofMap {
        dim,
        k,
        num_elements: ne,
        num_facets: nf,
        interior_size,
        facet_size,
        interior_offsets,
        trace_offsets,
        fixed: vec![false; total],
        gauge: gauge.then_some(total - 1),
        total,
    };
    let mf = poly_dim(dim - 1, k);
    for f in 0..nf {
        let boundary = mesh.is_boundary_facet(f);
        let b = map.trace_range(f, Field::BHat(0));
        for i in b.start..b.start + mf {
            map.fixed[i] = true;
        }
        if boundary {
            for field in [Field::UHat(0), Field::BHat(0), Field::THat(0), Field::RHat(0)] {
                for i in map.trace_range(f, field) {
                    map.fixed[i] = true;
                }
            }
        }
    }
    Ok(map)
}

impl DofMap {
    pub fn interior_total(&self) -> usize {
        self.num_elements * self.interior_size
    }

    pub fn interior_range(&self, element: usize, field: Field) -> Range<usize> {
        let slot = interior_slot(field).expect("interior field");
        let start = element * self.interior_size + self.interior_offsets[slot];
        start..start + field.size(self.dim, self.k)
    }

    /// Global range of a trace field on facet `facet`; the local facet index
    /// carried by `field` is ignored.
    pub fn trace_range(&self, facet: usize, field: Field) -> Range<usize> {
        let slot = trace_slot(field).expect("trace field");
        let start = self.interior_total() + facet * self.facet_size + self.trace_offsets[slot];
        start..start + field.size(self.dim, self.k)
    }

    /// Global range of `field` seen from `element`; trace fields are resolved
    /// through the element's local facet.
    pub fn field_range(&self, mesh: &SimplicialMesh, element: usize, field: Field) -> Range<usize> {
        match field.facet() {
            Some(l) => self.trace_range(mesh.element_facets(element)[l], field),
            None => self.interior_range(element, field),
        }
    }

    /// Number of free (non-eliminated) unknowns.
    pub fn num_free(&self) -> usize {
        self.fixed.iter().filter(|f| !**f).count()
    }

    /// Number of unknowns of each trace field summed over all facets, before
    /// boundary elimination.
    pub fn trace_count(&self, field: Field) -> usize {
        self.num_facets * field.size(self.dim, self.k)
    }

    pub fn interior_count(&self, field: Field) -> usize {
        self.num_elements * field.size(self.dim, self.k)
    }

    pub fn curl_components(&self) -> usize {
        curl_components(self.dim)
    }
}

/// Coefficient vector addressed through a [`DofMap`].
#[derive(Debug, Clone)]
pub struct StateVector {
    pub map: Arc<DofMap>,
    pub values: Vec<f64>,
}

impl StateVector {
    pub fn zeros(map: Arc<DofMap>) -> Self {
        let values = vec![0.0; map.total];
        Self { map, values }
    }

    pub fn new(map: Arc<DofMap>, values: Vec<f64>) -> Result<Self> {
        if values.len() != map.total {
            return Err(invalid(format!("state has {} entries, dof map expects {}", values.len(), map.total)));
        }
        Ok(Self { map, values })
    }

    pub fn interior(&self, element: usize, field: Field) -> &[f64] {
        &self.values[self.map.interior_range(element, field)]
    }

    pub fn interior_mut(&mut self, element: usize, field: Field) -> &mut [f64] {
        let r = self.map.interior_range(element, field);
        &mut self.values[r]
    }

    pub fn trace(&self, facet: usize, field: Field) -> &[f64] {
        &self.values[self.map.trace_range(facet, field)]
    }

    pub fn trace_mut(&mut self, facet: usize, field: Field) -> &mut [f64] {
        let r = self.map.trace_range(facet, field);
        &mut self.values[r]
    }

    pub fn gauge_multiplier(&self) -> Option<f64> {
        self.map.gauge.map(|g| self.values[g])
    }
}
