//! Structure-preserving adaptive hyper-reduction of parametric nonlinear
//! Hamiltonian systems.
//!
//! The crate evolves a symplectic dynamical low-rank approximation of a
//! matrix-valued Hamiltonian flow, approximates the nonlinear Hamiltonian
//! term with a gradient-preserving empirical interpolation that is updated
//! online via closed-form low-rank corrections, and adapts both the reduced
//! rank and the interpolation dimension from a projection-error indicator.
//! A 2D nonlinear Schrödinger benchmark and a CLI driver exercise the whole
//! pipeline end to end.

pub mod dlr;
pub mod error;
pub mod model;
pub mod symplectic;

pub use error::{Error, Result};
