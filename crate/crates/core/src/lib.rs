//! A desk-scale laboratory for constrained Hamiltonian dynamics on
//! finite-dimensional presymplectic phase spaces.
//!
//! The crate provides exact linear presymplectic algebra at a point, the
//! iterative consistency algorithm that discovers initial-value constraints
//! and classifies them, lapse-shift metric splitting, four built-in lattice
//! field theories packaged as presymplectic systems, and a fixed-step
//! integrator with constraint monitoring.

pub mod error;
pub mod gnh;
pub mod grid;
pub mod integrator;
pub mod layout;
pub mod linear;
pub mod scalar;
pub mod slicing;
pub mod subspace;
pub mod system;
pub mod theories;
pub mod twoform;

pub use error::{CoreError, Result};
pub use gnh::{run_gnh, GnhReport};
pub use layout::{Block, BlockLayout, StateVector};
pub use scalar::ScalarFunction;
pub use subspace::Subspace;
pub use system::{ConstraintClass, ConstraintRecord, PresymplecticSystem, Tolerances};
pub use twoform::TwoFormField;
