//! Central numerical tolerances.
//!
//! Every tolerance used by the library lives here with a note on where it
//! applies, so tests and library code agree on one set of numbers.

/// Algebraic identities that hold exactly in exact arithmetic: projector
/// idempotence and self-adjointness, measure completeness, partition-of-unity
/// residuals.  Scaled by the operand norm where relevant.
pub const ALGEBRAIC: f64 = 1e-10;

/// Randomized lemma checks (invariance under commuting evolution,
/// polarization equality of measures, orthogonality bounds).  Looser than
/// [`ALGEBRAIC`] because the quantities compared go through an eigensolve or
/// an evolution step.
pub const RANDOMIZED: f64 = 1e-8;

/// Relative singular-value threshold for numerical rank.  A family of states
/// counts as linearly independent when every singular value of its Gram
/// factor stays above `RANK_REL` times the largest.
pub const RANK_REL: f64 = 1e-10;

/// Normalized pairwise overlap above which a decomposition no longer counts
/// as orthogonal.  Born weights are still reported past this point but carry
/// a warning flag.
pub const ORTHO_WARN: f64 = 1e-6;

/// Relative tolerance for "these states are equal" checks that involve sums
/// of evolved states: coarsening sums, tree lineage consistency, root
/// reconstruction.
pub const SUM_MATCH_REL: f64 = 1e-8;

/// Forward-then-backward evolution must return the input to this relative
/// accuracy over the horizons used here.
pub const UNITARY_ROUNDTRIP: f64 = 1e-12;

/// Norm defect tolerated when a nominally unit state is sampled onto a
/// truncated domain (Gaussian tails leaving the box, discretized momentum
/// content).
pub const NORM_TRUNCATION: f64 = 1e-6;

/// Absolute tolerance for comparing a numerically sampled proximity curve
/// against its closed form.
pub const CURVE_ABS: f64 = 5e-3;

/// Proximity value below which two evolved channels count as separated when
/// deciding branching times.
pub const BRANCH_THRESHOLD: f64 = 1e-3;

/// Proximity value below which scattering channels count as separated at the
/// simulation horizon.  Looser than [`BRANCH_THRESHOLD`] because sharp
/// velocity masks leave slowly decaying spatial tails.
pub const CHANNEL_SEPARATION: f64 = 5e-2;

/// Density within ten cells of the domain boundary above which a periodic
/// grid run is flagged as wrapped.
pub const WRAP_DENSITY: f64 = 1e-8;

/// Enumeration ceiling for exact assignment searches (`labels^cells`).
/// Requests above this return a resource-limit error instead of running.
pub const ENUMERATION_CAP: u64 = 1 << 23;
