//! Exact finite-dimensional backend.
//!
//! States are dense complex vectors; spectral measures are finite families of
//! orthogonal projectors, one per atom, each atom sitting at a point of the
//! outcome space.  Everything here is small and exact: dimensions in the
//! tens, tolerances at the algebraic level.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::cells::CellMask;
use crate::error::{Error, Result};
use crate::measure::DiscreteScalarMeasure;
use crate::proximity::MeasureBackend;
use crate::state::State;
use crate::tree::Propagator;
use crate::{tol, C64};

/// Absolute coordinate tolerance when matching outcome-space points.
pub const POINT_TOL: f64 = 1e-9;

/// Dense complex state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amp: DVector<C64>,
}

impl StateVector {
    pub fn new(amp: DVector<C64>) -> Self {
        Self { amp }
    }

    pub fn from_components(parts: impl IntoIterator<Item = C64>) -> Self {
        Self { amp: DVector::from_vec(parts.into_iter().collect()) }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { amp: DVector::zeros(dim) }
    }

    /// Basis vector `e_k`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[k] = C64::new(1.0, 0.0);
        Self { amp: v }
    }

    pub fn dim(&self) -> usize {
        self.amp.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amp
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::InvalidInput(String::from("cannot normalize zero state")));
        }
        Ok(self.scale(C64::new(1.0 / n, 0.0)))
    }
}

impl State for StateVector {
    fn inner(&self, other: &Self) -> C64 {
        self.amp.dotc(&other.amp)
    }

    fn add(&self, other: &Self) -> Self {
        Self { amp: &self.amp + &other.amp }
    }

    fn sub(&self, other: &Self) -> Self {
        Self { amp: &self.amp - &other.amp }
    }

    fn scale(&self, factor: C64) -> Self {
        Self { amp: &self.amp * factor }
    }
}

/// Subset of the outcome space, closed under the operations the library
/// needs: membership for selecting atoms and (where it is well defined)
/// distance for building dilations.
#[derive(Debug, Clone)]
pub enum Region {
    /// Finite point set; membership within [`POINT_TOL`].
    Points(Vec<Vec<f64>>),
    /// Closed half-space `{x : normal·x ≤ offset}`.
    HalfSpace { normal: Vec<f64>, offset: f64 },
    /// Closed axis-aligned box.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Union(Vec<Region>),
    Complement(alloc::boxed::Box<Region>),
    /// `{x : d(x, base) ≤ radius}`.
    Dilation { base: alloc::boxed::Box<Region>, radius: f64 },
    Everything,
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

impl Region {
    /// Half-line `{x ≤ cut}` in one dimension.
    pub fn half_line_below(cut: f64) -> Self {
        Region::HalfSpace { normal: alloc::vec![1.0], offset: cut }
    }

    /// Half-line `{x ≥ cut}` in one dimension.
    pub fn half_line_above(cut: f64) -> Self {
        Region::HalfSpace { normal: alloc::vec![-1.0], offset: -cut }
    }

    /// Closed interval in one dimension.
    pub fn interval(lo: f64, hi: f64) -> Self {
        Region::Box { lo: alloc::vec![lo], hi: alloc::vec![hi] }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Points(pts) => pts.iter().any(|p| euclid(p, x) <= POINT_TOL),
            Region::HalfSpace { normal, offset } => {
                let dot: f64 = normal.iter().zip(x).map(|(n, v)| n * v).sum();
                dot <= *offset
            }
            Region::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(&v, (&l, &h))| v >= l && v <= h),
            Region::Union(parts) => parts.iter().any(|r| r.contains(x)),
            Region::Complement(base) => !base.contains(x),
            Region::Dilation { base, radius } => match base.distance(x) {
                Some(d) => d <= *radius + POINT_TOL,
                None => false,
            },
            Region::Everything => true,
        }
    }

    /// Euclidean distance from `x` to the region; `None` when the region has
    /// no usable distance function (complements of non-trivial sets).
    pub fn distance(&self, x: &[f64]) -> Option<f64> {
        match self {
            Region::Points(pts) => pts
                .iter()
                .map(|p| euclid(p, x))
                .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.min(d)))),
            Region::HalfSpace { normal, offset } => {
                let nn: f64 = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
                if nn == 0.0 {
                    return None;
                }
                let dot: f64 = normal.iter().zip(x).map(|(n, v)| n * v).sum();
                Some(((dot - offset) / nn).max(0.0))
            }
            Region::Box { lo, hi } => {
                let mut acc = 0.0;
                for (&v, (&l, &h)) in x.iter().zip(lo.iter().zip(hi)) {
                    let d = if v < l {
                        l - v
                    } else if v > h {
                        v - h
                    } else {
                        0.0
                    };
                    acc += d * d;
                }
                Some(acc.sqrt())
            }
            Region::Union(parts) => {
                let mut best: Option<f64> = None;
                for r in parts {
                    let d = r.distance(x)?;
                    best = Some(best.map_or(d, |b| b.min(d)));
                }
                best
            }
            Region::Complement(base) => {
                if !base.contains(x) {
                    Some(0.0)
                } else {
                    None
                }
            }
            Region::Dilation { base, radius } => {
                base.distance(x).map(|d| (d - radius).max(0.0))
            }
            Region::Everything => Some(0.0),
        }
    }
}

/// One atom of a finite spectral measure: an orthogonal projector sitting at
/// a point of the outcome space.
#[derive(Debug, Clone)]
pub struct Atom {
    pub point: Vec<f64>,
    pub projector: DMatrix<C64>,
}

/// Finite projection-valued measure `G` with atomic support.
///
/// Construction validates the algebra to [`tol::ALGEBRAIC`]: each projector
/// is self-adjoint and idempotent, distinct projectors annihilate each
/// other, and the family sums to the identity.
#[derive(Debug, Clone)]
pub struct AtomicSpectralMeasure {
    dim: usize,
    point_dim: usize,
    atoms: Vec<Atom>,
}

fn matrix_scale(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0f64, |a, z| a.max(z.norm())).max(1.0)
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0f64, |a, z| a.max(z.norm()))
}

impl AtomicSpectralMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        let first = atoms
            .first()
            .ok_or_else(|| Error::InvalidMeasure(String::from("no atoms")))?;
        let dim = first.projector.nrows();
        let point_dim = first.point.len();
        for (k, a) in atoms.iter().enumerate() {
            if a.projector.nrows() != dim || a.projector.ncols() != dim {
                return Err(Error::InvalidMeasure(format!("atom {k}: projector shape mismatch")));
            }
            if a.point.len() != point_dim {
                return Err(Error::InvalidMeasure(format!("atom {k}: point dimension mismatch")));
            }
            let p = &a.projector;
            let scale = matrix_scale(p);
            let herm = crate::linalg::hermiticity_defect(p);
            if herm > tol::ALGEBRAIC * scale {
                return Err(Error::InvalidMeasure(format!(
                    "atom {k}: projector not self-adjoint (defect {herm:.3e})"
                )));
            }
            let idem = max_abs(&(p * p - p));
            if idem > tol::ALGEBRAIC * scale {
                return Err(Error::InvalidMeasure(format!(
                    "atom {k}: projector not idempotent (defect {idem:.3e})"
                )));
            }
        }
        for i in 0..atoms.len() {
            for j in (i + 1)..atoms.len() {
                if euclid(&atoms[i].point, &atoms[j].point) <= POINT_TOL {
                    return Err(Error::InvalidMeasure(format!(
                        "atoms {i} and {j} share an outcome point"
                    )));
                }
                let cross = max_abs(&(&atoms[i].projector * &atoms[j].projector));
                if cross > tol::ALGEBRAIC {
                    return Err(Error::InvalidMeasure(format!(
                        "atoms {i} and {j} are not orthogonal (overlap {cross:.3e})"
                    )));
                }
            }
        }
        let mut sum = DMatrix::<C64>::zeros(dim, dim);
        for a in &atoms {
            sum += &a.projector;
        }
        let defect = max_abs(&(sum - DMatrix::identity(dim, dim)));
        if defect > tol::ALGEBRAIC {
            return Err(Error::InvalidMeasure(format!(
                "atoms do not sum to the identity (defect {defect:.3e})"
            )));
        }
        Ok(Self { dim, point_dim, atoms })
    }

    /// Coordinate measure: atom `k` projects onto basis vector `k` and sits
    /// at the given point.
    pub fn coordinate(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.len();
        let atoms = points
            .into_iter()
            .enumerate()
            .map(|(k, point)| {
                let mut p = DMatrix::<C64>::zeros(dim, dim);
                p[(k, k)] = C64::new(1.0, 0.0);
                Atom { point, projector: p }
            })
            .collect();
        Self::new(atoms)
    }

    /// Coordinate measure on the 1-d outcome points `0, 1, …, dim−1`.
    pub fn coordinate_line(dim: usize) -> Self {
        Self::coordinate((0..dim).map(|k| alloc::vec![k as f64]).collect())
            .expect("coordinate measure is always valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Atoms whose outcome point lies in the region.
    pub fn region_cells(&self, region: &Region) -> CellMask {
        CellMask::from_fn(self.atoms.len(), |k| region.contains(&self.atoms[k].point))
    }

    /// Applies `G(Δ)` to a state: sum of the projections of the atoms whose
    /// points lie in `Δ`.
    pub fn apply(&self, region: &Region, psi: &StateVector) -> Result<StateVector> {
        self.check_dim(psi)?;
        Ok(self.project(psi, &self.region_cells(region)))
    }

    /// Scalar measure `G_Ψ`: mass `‖G(atom)Ψ‖²` at each atom's point.
    pub fn scalar(&self, psi: &StateVector) -> Result<DiscreteScalarMeasure> {
        self.check_dim(psi)?;
        let weights = self.cell_masses(psi);
        let points = self.atoms.iter().map(|a| a.point.clone()).collect();
        DiscreteScalarMeasure::new(points, weights)
    }

    /// Summed projector `G(Δ)` as a matrix.
    pub fn region_projector(&self, region: &Region) -> DMatrix<C64> {
        let mut m = DMatrix::<C64>::zeros(self.dim, self.dim);
        for k in self.region_cells(region).indices() {
            m += &self.atoms[k].projector;
        }
        m
    }

    fn check_dim(&self, psi: &StateVector) -> Result<()> {
        if psi.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: psi.dim() });
        }
        Ok(())
    }

    /// Decides whether two measures agree as projection-valued measures by
    /// comparing the scalar measures they induce, grouped by outcome point.
    ///
    /// The probe family is a deterministic basis-spanning set (basis vectors
    /// plus pairwise real and imaginary mixtures, enough to pin down every
    /// projector entry by polarization) extended by `trials` seeded random
    /// states.  Returns the largest mass discrepancy seen.
    pub fn scalar_equality_defect(
        &self,
        other: &Self,
        trials: usize,
        seed: u64,
    ) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        if self.point_dim != other.point_dim {
            return Err(Error::InvalidInput(String::from(
                "measures live over outcome spaces of different dimension",
            )));
        }
        let dim = self.dim;
        let mut probes: Vec<StateVector> = Vec::new();
        for i in 0..dim {
            probes.push(StateVector::basis(dim, i));
            for j in (i + 1)..dim {
                let ei = StateVector::basis(dim, i);
                let ej = StateVector::basis(dim, j);
                probes.push(ei.add(&ej));
                probes.push(ei.add(&ej.scale(C64::new(0.0, 1.0))));
            }
        }
        let mut rng = crate::sampling::seeded_rng(seed);
        for _ in 0..trials {
            probes.push(crate::sampling::random_state(&mut rng, dim));
        }
        let mut worst = 0.0f64;
        for psi in &probes {
            let ma = self.scalar(psi)?;
            let mb = other.scalar(psi)?;
            worst = worst.max(ma.mass_discrepancy(&mb, POINT_TOL));
        }
        Ok(worst)
    }

    /// `scalar_equality_defect` thresholded at [`tol::RANDOMIZED`] relative
    /// to the probe norms (the probe family is built from unit basis states,
    /// so the absolute threshold suffices).
    pub fn measures_equal(&self, other: &Self, trials: usize, seed: u64) -> Result<bool> {
        Ok(self.scalar_equality_defect(other, trials, seed)? <= tol::RANDOMIZED)
    }
}

impl MeasureBackend for AtomicSpectralMeasure {
    type State = StateVector;

    fn cell_count(&self) -> usize {
        self.atoms.len()
    }

    fn point_dim(&self) -> usize {
        self.point_dim
    }

    fn cell_point(&self, cell: usize) -> Vec<f64> {
        self.atoms[cell].point.clone()
    }

    fn project(&self, s: &StateVector, cells: &CellMask) -> StateVector {
        let mut out = DVector::zeros(self.dim);
        for k in cells.indices() {
            out += &self.atoms[k].projector * s.amplitudes();
        }
        StateVector::new(out)
    }

    fn cell_cross(&self, a: &StateVector, b: &StateVector) -> Vec<C64> {
        self.atoms
            .iter()
            .map(|atom| {
                let pa = &atom.projector * a.amplitudes();
                let pb = &atom.projector * b.amplitudes();
                pa.dotc(&pb)
            })
            .collect()
    }
}

/// Propagator `U(t) = e^{−iHt}` for a fixed Hermitian `H`, evaluated through
/// its eigendecomposition (exact for any `t`, positive or negative; ħ = 1).
#[derive(Debug, Clone)]
pub struct FiniteHamiltonian {
    eigvals: DVector<f64>,
    eigvecs: DMatrix<C64>,
}

impl FiniteHamiltonian {
    pub fn new(h: DMatrix<C64>) -> Result<Self> {
        let (eigvals, eigvecs) = crate::linalg::checked_hermitian_eigen(&h, tol::ALGEBRAIC)?;
        Ok(Self { eigvals, eigvecs })
    }

    /// `H = Σ_a λ_a G(atom a)`: diagonal in the measure, hence commuting
    /// with every `G(Δ)`.
    pub fn commuting_with(measure: &AtomicSpectralMeasure, lambdas: &[f64]) -> Result<Self> {
        if lambdas.len() != measure.atoms().len() {
            return Err(Error::InvalidInput(String::from(
                "need one eigenvalue per atom of the measure",
            )));
        }
        let mut h = DMatrix::<C64>::zeros(measure.dim(), measure.dim());
        for (atom, &l) in measure.atoms().iter().zip(lambdas) {
            h += &atom.projector * C64::new(l, 0.0);
        }
        Self::new(h)
    }

    pub fn dim(&self) -> usize {
        self.eigvals.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigvals
    }
}

impl Propagator for FiniteHamiltonian {
    type State = StateVector;

    fn evolve(&self, s: &StateVector, t: f64) -> StateVector {
        let coeffs = self.eigvecs.adjoint() * s.amplitudes();
        let mut out = DVector::zeros(self.dim());
        for k in 0..self.dim() {
            let phase = C64::from_polar(1.0, -self.eigvals[k] * t);
            out += DVector::from(self.eigvecs.column(k)) * (coeffs[k] * phase);
        }
        StateVector::new(out)
    }
}
