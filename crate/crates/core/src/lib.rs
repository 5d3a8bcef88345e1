//! Correlation-matrix dynamics for dissipative lattice fermions and bosons,
//! with surface-roughness observables and Family-Vicsek scaling analysis.
//!
//! The library is organized around closed equations of motion for the
//! two-point matrix `D` and four-point tensor `F` of a non-interacting
//! open chain under on-site dephasing or particle in/out-flow:
//!
//! - [`model`]: configuration, particle statistics, initial Fock states.
//! - [`exact`]: the (D, F) equations of motion and fixed-step integrator,
//!   including a D-only fast path and assumption-check diagnostics.
//! - [`observables`]: surface roughness, number moments, left-right transfer.
//! - [`effective`]: coarse-grained diffusion equations for the diagonals.
//! - [`ew`]: the analytic Edwards-Wilkinson reference roughness.
//! - [`scaling`]: Family-Vicsek exponent fits, bootstrap errors, collapses.
//! - [`oracle`]: full-Hilbert-space Lindblad evolution at small L, the
//!   ground truth the rest of the crate is tested against.

pub mod model;
pub mod oracle;
pub mod tensor;

pub use model::{
    build_initial_correlations, CorrelationState, Dissipator, InitialState, ModelError,
    Statistics, SystemConfig,
};
