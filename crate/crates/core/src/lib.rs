//! Time evolution of the generalized two-dimensional quadratic Hamiltonian
//! through a product of fifteen one-parameter exponentials.

pub mod adjoint;
pub mod algebra;
pub mod config;
pub mod error;
pub mod expr;
pub mod flow;
pub mod observables;
pub mod oracles;
pub mod propagator;
pub mod reduction;
pub mod schedule;
pub mod verify;

pub use nalgebra;
pub use num_complex::Complex64;

pub use adjoint::{adjoint_matrix, table_closed_form, AdjointMatrix, AdjointRep, EnergyShift};
pub use algebra::{AlgebraReport, AlgebraViolation, GeneratorId, StructureConstants, DIM};
pub use error::*;
pub use expr::{parse_expression, Expr};
pub use flow::{
    constant_field_closed_form, integrate, integrate_from, AlphaState, Breakdown, BreakdownReason, FlowOptions,
    FlowResult,
};
pub use observables::{
    action_integral, classical_lagrangian, euler_residuals, heisenberg_closed_form, heisenberg_map, symplectic_j,
    AffineSymplecticMap, QuadraticForm,
};
pub use oracles::{apply_kernel, fundamental_matrix, ClassicalSystem, GaussianState, Grid};
pub use propagator::{
    green, green_degenerate, green_generic, green_landau, Branch, GreenPoint, GreenSample, Kernel, DEFAULT_BRANCH_EPS,
};
pub use reduction::{assemble, transcribed_odes, ReductionState};
pub use schedule::{CoefficientSchedule, LandauParams, Preset, Schedule};
pub use config::{execute, green_file, run_file, RunConfig, RunOutput, Stages};
pub use verify::{ode_report, reference_preset, verify, VerifyReport};

/// Real 15x15 matrix over the generator basis.
pub type Mat15 = nalgebra::SMatrix<f64, 15, 15>;
/// Real vector over the generator basis.
pub type Vec15 = nalgebra::SVector<f64, 15>;
