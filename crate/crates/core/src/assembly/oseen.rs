use std::fmt;
use std::sync::Arc;

use super::condensed::solve_segregated;
use super::dofmap::{build_dofmap, StateVector};
use super::solve::solve_sparse;
use super::system::OseenAssembler;
use crate::basis::PhysicalBasis;
use crate::error::{invalid, Error, Result};
use crate::forms::{ElementContext, Field, ProblemData, ReferenceData};
use crate::mesh::SimplicialMesh;
use crate::params::PhysicalParameters;

/// One line of the Oseen log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `|u^n - u^{n-1}|` in L² over interior velocity coefficients.
    pub difference: f64,
    /// Backward error of the linear solve.
    pub residual: f64,
}

impl fmt::Display for IterationRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "iter={} diff={:.6e} residual={:.3e}", self.iteration, self.difference, self.residual)
    }
}

/// How each linearised system is solved. Both give the same solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolveStrategy {
    /// One sparse LU of the full system.
    Monolithic,
    /// Magnetic, thermal and fluid blocks in turn, each reduced to its facet
    /// unknowns by static condensation.
    #[default]
    Condensed,
}

#[derive(Debug, Clone, Copy)]
pub struct OseenOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub strategy: SolveStrategy,
}

impl Default for OseenOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 50, strategy: SolveStrategy::default() }
    }
}

#[derive(Debug, Clone)]
pub struct OseenResult {
    pub state: StateVector,
    pub log: Vec<IterationRecord>,
}

/// L² norm of the interior velocity difference. The element basis is
/// orthonormal, so this is the Euclidean norm of the coefficient difference.
pub fn velocity_difference(a: &StateVector, b: &StateVector) -> f64 {
    let map = &a.map;
    (0..map.num_elements)
        .flat_map(|e| map.interior_range(e, Field::U))
        .map(|i| (a.values[i] - b.values[i]).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Oseen iteration from the zero initial guess until the velocity update
/// drops below `tol`.
pub fn oseen_iterate(
    mesh: &SimplicialMesh,
    k: usize,
    params: &PhysicalParameters,
    data: &dyn ProblemData,
    options: OseenOptions,
) -> Result<OseenResult> {
    oseen_iterate_with(mesh, k, params, data, options, |_| {})
}

/// As [`oseen_iterate`], reporting every iteration to `on_iteration`.
pub fn oseen_iterate_with(
    mesh: &SimplicialMesh,
    k: usize,
    params: &PhysicalParameters,
    data: &dyn ProblemData,
    options: OseenOptions,
    mut on_iteration: impl FnMut(&IterationRecord),
) -> Result<OseenResult> {
    if !(options.tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {}", options.tol)));
    }
    if options.max_iter == 0 {
        return Err(invalid("max_iter must be at least 1"));
    }
    let map = Arc::new(build_dofmap(mesh, k)?);
    let assembler = OseenAssembler::with_map(mesh, map.clone(), params, data)?;
    let mut prev = StateVector::zeros(map.clone());
    let mut log = Vec::new();
    for iteration in 1..=options.max_iter {
        let (x, residual) = match options.strategy {
            SolveStrategy::Monolithic => {
                let sol = solve_sparse(&assembler.assemble(&prev)?)?;
                (sol.x, sol.relative_residual)
            }
            SolveStrategy::Condensed => solve_segregated(&assembler, &prev)?,
        };
        let next = StateVector::new(map.clone(), x)?;
        let difference = velocity_difference(&next, &prev);
        let record = IterationRecord { iteration, difference, residual };
        on_iteration(&record);
        log.push(record);
        prev = next;
        if difference < options.tol {
            return Ok(OseenResult { state: prev, log });
        }
    }
    let last_difference = log.last().map(|r| r.difference).unwrap_or(f64::NAN);
    Err(Error::NonConvergence { iterations: options.max_iter, last_difference, log })
}

/// Divergence of a discrete field split into its element and facet parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceReport {
    /// Max over elements of `|div v_h|` at quadrature points and vertices.
    pub element: f64,
    /// Max over interior facets of `|[v_h . n]|` at facet quadrature points.
    pub jump: f64,
}

impl DivergenceReport {
    pub fn max(&self) -> f64 {
        self.element.max(self.jump)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceField {
    Velocity,
    Magnetic,
}

/// Sup-norm of the divergence and of the normal jumps of `u_h` or `B_h`.
pub fn max_divergence(state: &StateVector, field: DivergenceField, mesh: &SimplicialMesh) -> Result<DivergenceReport> {
    let map = &state.map;
    if map.num_elements != mesh.num_elements() {
        return Err(invalid("state does not belong to this mesh"));
    }
    let (d, k) = (mesh.dim(), map.k);
    let f = match field {
        DivergenceField::Velocity => Field::U,
        DivergenceField::Magnetic => Field::B,
    };
    let reference = ReferenceData::bilinear(d, k)?;
    let nk = crate::basis::poly_dim(d, k);
    let mut element: f64 = 0.0;
    let mut normal_sum = vec![0.0f64; 0];
    let mut jump: f64 = 0.0;
    // Per interior facet: normal component seen from the first side at each
    // facet point, in facet-rule order.
    let np = reference.facet_rule.len();
    normal_sum.resize(mesh.num_facets() * np, 0.0);
    for e in 0..mesh.num_elements() {
        let coeffs = state.interior(e, f);
        let ctx = ElementContext::new(mesh, e, &reference)?;
        let div_at = |grad: &[[f64; 3]]| -> f64 {
            (0..d).map(|c| coeffs[c * nk..(c + 1) * nk].iter().zip(grad).map(|(a, g)| a * g[c]).sum::<f64>()).sum()
        };
        for q in &ctx.points {
            element = element.max(div_at(&q.grad).abs());
        }
        let basis = PhysicalBasis::from_parts(reference.element_basis.clone(), mesh.affine_map(e));
        for &v in mesh.element(e) {
            element = element.max(div_at(&basis.grad(mesh.vertex(v))).abs());
        }
        for fd in &ctx.facets {
            if fd.boundary {
                continue;
            }
            for (i, p) in fd.points.iter().enumerate() {
                let vn: f64 = (0..d)
                    .map(|c| fd.normal[c] * coeffs[c * nk..(c + 1) * nk].iter().zip(&p.phi).map(|(a, b)| a * b).sum::<f64>())
                    .sum();
                normal_sum[fd.facet * np + i] += vn;
            }
        }
    }
    for f in 0..mesh.num_facets() {
        if !mesh.is_boundary_facet(f) {
            for i in 0..np {
                jump = jump.max(normal_sum[f * np + i].abs());
            }
        }
    }
    Ok(DivergenceReport { element, jump })
}
