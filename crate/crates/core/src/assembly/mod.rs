//! Global numbering, assembly of the linearised system, sparse solves and
//! the Oseen driver.

mod condensed;
mod dofmap;
mod multifrontal;
mod oseen;
mod solve;
mod system;

pub use condensed::Subsystem;
pub use dofmap::{build_dofmap, build_dofmap_with_gauge, DofMap, StateVector};
pub use oseen::{
    max_divergence, oseen_iterate, oseen_iterate_with, velocity_difference, DivergenceField, DivergenceReport,
    IterationRecord, OseenOptions, OseenResult, SolveStrategy,
};
pub use solve::{solve_sparse, LinearSolution, RESIDUAL_TOLERANCE, SINGULAR_CONDITION};
pub use system::{assemble_oseen, OseenAssembler, SparseSystem};
