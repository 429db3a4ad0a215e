//! Hybridizable discontinuous Galerkin solver for the steady, thermally
//! coupled, incompressible MHD equations on simplicial meshes of the unit
//! square and cube.
//!
//! The discrete velocity and magnetic fields are exactly divergence-free and
//! have continuous normal components. Nonlinear terms are handled by Oseen
//! (Picard) iteration with one sparse direct solve per step.

pub mod assembly;
pub mod basis;
pub mod error;
pub mod forms;
pub mod mesh;
pub mod params;
pub mod verification;

pub use assembly::{
    assemble_oseen, build_dofmap, max_divergence, oseen_iterate, solve_sparse, DivergenceField, DivergenceReport, DofMap,
    IterationRecord, OseenOptions, OseenResult, SparseSystem, StateVector,
};
pub use basis::{make_basis, make_quadrature, PolynomialBasis, QuadratureRule};
pub use error::{Error, Result};
pub use forms::{Field, Form, LocalBlocks, ProblemData};
pub use mesh::{build_unit_cube_mesh, build_unit_square_mesh, ElementGeometry, Point, SimplicialMesh};
pub use params::PhysicalParameters;
pub use verification::{
    compute_error_report, convergence_study, make_case, ConvergenceReport, ErrorReport, ManufacturedCase,
};
