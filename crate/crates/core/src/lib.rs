//! Finite-difference solver for a coupled pair of singularly perturbed
//! reaction-diffusion equations with Robin boundary conditions.
//!
//! ```text
//! -eps^2 y1'' + b11 y1 + b12 y2 = f1
//! -mu^2  y2'' + b21 y1 + b22 y2 = f2,   0 < x < 1
//! ```
//!
//! Boundary rows use a cubic-spline approximation of `y'`, interior rows
//! the three-point central difference. Meshes are piecewise uniform
//! (Shishkin) or graded inside the layers (Bakhvalov-Shishkin).

pub mod discretize;
pub mod error;
pub mod error_lab;
pub mod linsolve;
pub mod mesh;
pub mod problem;

pub use discretize::{
    assemble, m_matrix_audit, m_matrix_threshold, truncation_identities, Block, DiscreteSystem,
    MMatrixReport, Pair, TruncationReport,
};
pub use error::{Error, Result};
pub use error_lab::{
    error_vs_fine, two_mesh_difference, uniform_sweep, ConvergenceReport, ErrorCell, MuRule,
    Quantities, SweepConfig,
};
pub use linsolve::{solve, solve_dense_reference, solve_or_dense, solve_plain, SolutionGrid};
pub use mesh::{generate, refine_pinned, Mesh, MeshKind, MeshParams, Transition};
pub use problem::{builtin, validate, ProblemSpec, RobinBc, ValidationReport, BUILTIN_NAMES};
