//! Decomposition calculus for quantum states.
//!
//! A decomposition of a state vector is a finite set of linearly independent
//! vectors that sum to it.  This crate provides the machinery to reason about
//! such decompositions relative to a spectral measure: how close a
//! decomposition comes to being an exact spectral split (the proximity
//! functional `w`), how decompositions refine one another over time
//! (decomposition trees and their branches), and the mass geometry of the
//! resulting branch states (centroids, spreads, trajectories).
//!
//! The crate is backend-agnostic: anything implementing [`State`] together
//! with a [`MeasureBackend`] can be fed to the proximity and tree machinery.
//! A small exact finite-dimensional backend is included ([`finite`]); grid
//! wavefunction backends live in companion crates.
//!
//! The crate is `no_std`-compatible (with `alloc`); the default `std` feature
//! only switches dependency features, not functionality.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cells;
pub mod decomposition;
pub mod error;
pub mod finite;
pub mod geometry;
pub mod linalg;
pub mod measure;
pub mod proximity;
pub mod sampling;
pub mod state;
pub mod tol;
pub mod tree;

pub use cells::CellMask;
pub use decomposition::{BornReport, CoarseningMap, Decomposition};
pub use error::Error;
pub use proximity::{MeasureBackend, WMethod, WReport};
pub use state::State;
pub use tree::{Propagator, SpatialTree};

/// Shorthand used throughout: double-precision complex scalar.
pub type C64 = num_complex::Complex64;
