//! Cutting with line actions: group averaging over `t ∈ [−T, T]` of the
//! constraint flow `e^{it(f−p)}`, its reduced closed form, and the check that
//! rigged states are exactly the positive spectral projection of `f`.
//!
//! Normalization: `∫dt e^{itu} = 2πδ(u)`, so averaged values are divided by
//! `2π` before being compared with the reduced formula.

pub mod fixture;
pub mod grid;
pub mod quadrature;
pub mod rigging;
pub mod trichotomy;

pub use fixture::{HalfLineFixture, RiggingFixture, StateSpec};
pub use grid::{Grid, GridFunction, Measure, Profile};
pub use quadrature::{QuadratureRegistry, QuadratureRule, Simpson, Trapezoid};
pub use rigging::{
    convergence_study, dirichlet_kernel, rigging_averaged, rigging_reduced, ConvergenceRow, ConvergenceTable,
    RiggingMethod, RiggingResult, RiggingStates,
};
pub use trichotomy::{verify_theorem2, StateCheck, SupportClass, Theorem2Report};
