//! Grid-based laboratory for the decomposition calculus.
//!
//! Supplies a periodic 1-D wavefunction backend, closed-form reference
//! curves for separating Gaussian pairs, a short-range scattering lane, and
//! the scenario runner behind the `psd` binary.

pub mod analytic;
pub mod formats;
pub mod grid;
pub mod scattering;
pub mod scenario;
pub mod verify;
