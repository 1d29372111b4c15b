//! Gauge-invariant projected entangled pair states for lattice gauge
//! theories with finite or truncated compact Lie gauge groups.
//!
//! The crate is `no_std` with `alloc`. It covers representation theory
//! ([`group`], [`cg`], [`exact`]), truncated physical spaces ([`spaces`]),
//! bosonic PEPS tensors ([`peps`]), SU(2) recoupling ([`recoupling`]),
//! fermionic fiducial operators ([`fermion`]) and exact contraction of small
//! lattices ([`lattice`]).

#![cfg_attr(not(test), no_std)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod cg;
pub mod error;
pub mod exact;
pub mod fermion;
pub mod group;
pub mod lattice;
pub mod linalg;
pub mod peps;
pub mod recoupling;
pub mod s3;
pub mod spaces;
pub mod su2;
pub mod tensor;

pub use error::{Error, Result};
