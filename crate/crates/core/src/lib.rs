//! Tensor-network phase-difference estimation.
//!
//! End-to-end classical pipeline for extracting an energy gap from
//! time-evolution circuits compressed into brick-wall form:
//!
//! 1. build the 1D Hubbard Hamiltonian and its exact reference eigenpairs
//!    ([`model`]),
//! 2. construct reference time-evolution MPOs with the second-order Trotter
//!    formula ([`trotter`]),
//! 3. compress state preparation and time evolution into nearest-neighbor
//!    brick-wall circuits by sweeping local polar-factor gate updates
//!    ([`compress`]),
//! 4. run the phase-gate circuit family and collect the complex signal
//!    s_t from four measurement settings ([`sim`], [`signal`]),
//! 5. estimate mode frequencies with a matrix-pencil initial guess refined
//!    by damped least squares ([`spectral`]),
//! 6. optionally mitigate compression error by a constrained mixture of
//!    circuit variants ([`aem`]).
//!
//! The [`pipeline`] module wires the stages together behind a flat key-value
//! run configuration; the `qpde` binary exposes them as CLI verbs.

pub mod aem;
pub mod circuit;
pub mod compress;
pub mod config;
pub mod error;
pub(crate) mod linalg;
pub mod model;
pub mod mps;
pub mod mpo;
pub mod pipeline;
pub mod serialize;
pub mod signal;
pub mod sim;
pub mod spectral;
pub mod tensor;
pub mod trotter;

pub use error::{QpdeError, Result};
pub use tensor::{contract, polar_unitary, truncated_svd, DenseTensor, SVDResult};
