//! Periodic one-dimensional grid wavefunctions.
//!
//! Position samples live on `n` evenly spaced points; the momentum side
//! uses the DFT layout `p_k = 2πħ·freq(k)/L` with the symmetric Fourier
//! normalization `ψ̂(p) = (dx/√(2πħ)) Σ_j ψ(x_j) e^{−i p x_j/ħ}`, which
//! makes the discrete Parseval identity exact:
//! `Σ_k |ψ̂_k|² dp = Σ_j |ψ_j|² dx`.

use num_complex::Complex64 as C64;
use psd_core::cells::CellMask;
use psd_core::proximity::MeasureBackend;
use psd_core::state::State;
use psd_core::tree::Propagator;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

pub const HBAR: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n: usize,
    pub length: f64,
    pub start: f64,
}

impl GridSpec {
    /// Box `[−length/2, length/2)` with `n` samples.
    pub fn centered(n: usize, length: f64) -> Self {
        assert!(n >= 4 && n.is_power_of_two(), "grid size must be a power of two");
        assert!(length > 0.0);
        Self { n, length, start: -0.5 * length }
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn dp(&self) -> f64 {
        2.0 * PI * HBAR / self.length
    }

    pub fn x(&self, j: usize) -> f64 {
        self.start + j as f64 * self.dx()
    }

    /// Signed DFT frequency of FFT index `k`.
    pub fn freq(&self, k: usize) -> i64 {
        if k <= self.n / 2 - 1 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    pub fn p(&self, k: usize) -> f64 {
        self.dp() * self.freq(k) as f64
    }
}

/// Complex samples on a [`GridSpec`], in position representation.
#[derive(Debug, Clone)]
pub struct GridWavefunction {
    pub spec: GridSpec,
    pub values: Vec<C64>,
}

impl GridWavefunction {
    pub fn new(spec: GridSpec, values: Vec<C64>) -> Self {
        assert_eq!(values.len(), spec.n);
        Self { spec, values }
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self { spec, values: vec![C64::new(0.0, 0.0); spec.n] }
    }

    pub fn density(&self, j: usize) -> f64 {
        self.values[j].norm_sqr()
    }

    /// Largest probability density within `margin` samples of the box
    /// boundary; a nonnegligible value flags imminent periodic wrap-around.
    pub fn boundary_density(&self, margin: usize) -> f64 {
        let n = self.spec.n;
        let mut worst = 0.0f64;
        for j in 0..margin.min(n) {
            worst = worst.max(self.density(j)).max(self.density(n - 1 - j));
        }
        worst
    }
}

impl State for GridWavefunction {
    fn inner(&self, other: &Self) -> C64 {
        debug_assert_eq!(self.spec, other.spec);
        let dx = self.spec.dx();
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            * dx
    }

    fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.spec, other.spec);
        Self {
            spec: self.spec,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        }
    }

    fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.spec, other.spec);
        Self {
            spec: self.spec,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }

    fn scale(&self, factor: C64) -> Self {
        Self { spec: self.spec, values: self.values.iter().map(|a| a * factor).collect() }
    }
}

/// Shared forward/inverse FFT plans for one grid size.
#[derive(Clone)]
pub struct FourierKit {
    spec: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FourierKit {
    pub fn new(spec: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            spec,
            forward: planner.plan_fft_forward(spec.n),
            inverse: planner.plan_fft_inverse(spec.n),
        }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    /// Momentum samples `ψ̂_k`, indexed by FFT index.
    pub fn to_momentum(&self, psi: &GridWavefunction) -> Vec<C64> {
        debug_assert_eq!(psi.spec, self.spec);
        let mut buf = psi.values.clone();
        self.forward.process(&mut buf);
        let scale = self.spec.dx() / (2.0 * PI * HBAR).sqrt();
        for (k, v) in buf.iter_mut().enumerate() {
            let phase = -self.spec.p(k) * self.spec.start / HBAR;
            *v *= C64::from_polar(scale, phase);
        }
        buf
    }

    pub fn from_momentum(&self, hat: &[C64]) -> GridWavefunction {
        assert_eq!(hat.len(), self.spec.n);
        let scale = (2.0 * PI * HBAR).sqrt() / self.spec.dx() / self.spec.n as f64;
        let mut buf: Vec<C64> = hat
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let phase = self.spec.p(k) * self.spec.start / HBAR;
                v * C64::from_polar(scale, phase)
            })
            .collect();
        self.inverse.process(&mut buf);
        GridWavefunction::new(self.spec, buf)
    }

    /// Squared-norm of the momentum samples, `Σ|ψ̂_k|² dp`.
    pub fn momentum_norm2(&self, hat: &[C64]) -> f64 {
        hat.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.spec.dp()
    }
}

/// Minimum-uncertainty packet centered at `x0` with momentum `p0`, built in
/// momentum space: `ψ̂(p) = (πσ_p²)^{−1/4} e^{−(p−p0)²/(2σ_p²)} e^{−ipx0/ħ}`.
///
/// The state is deliberately not renormalized; the returned defect
/// `|1 − ‖ψ‖²|` quantifies momentum-grid truncation and must stay below
/// the caller's tolerance.  Preconditions keep the packet representable:
/// `dx ≤ σx/8` and box length `≥ 20σx` where `σx = ħ/σ_p`.
pub fn make_gaussian(
    kit: &FourierKit,
    x0: f64,
    p0: f64,
    sigma_p: f64,
) -> Result<(GridWavefunction, f64), String> {
    let spec = kit.spec();
    let sigma_x = HBAR / sigma_p;
    if spec.dx() > sigma_x / 8.0 {
        return Err(format!(
            "grid step {} too coarse for packet width σx = {sigma_x}",
            spec.dx()
        ));
    }
    if spec.length < 20.0 * sigma_x {
        return Err(format!(
            "box {} shorter than 20σx = {}",
            spec.length,
            20.0 * sigma_x
        ));
    }
    let amp = 1.0 / (PI * sigma_p * sigma_p).powf(0.25);
    let hat: Vec<C64> = (0..spec.n)
        .map(|k| {
            let p = spec.p(k);
            let u = (p - p0) / sigma_p;
            C64::from_polar(amp * (-0.5 * u * u).exp(), -p * x0 / HBAR)
        })
        .collect();
    let psi = kit.from_momentum(&hat);
    let defect = (1.0 - psi.norm2()).abs();
    Ok((psi, defect))
}

/// Free evolution: per-mode phase `e^{−i p² t/(2mħ)}`.
pub struct FreePropagator {
    kit: FourierKit,
    pub mass: f64,
}

impl FreePropagator {
    pub fn new(kit: FourierKit, mass: f64) -> Self {
        assert!(mass > 0.0);
        Self { kit, mass }
    }
}

impl Propagator for FreePropagator {
    type State = GridWavefunction;

    fn evolve(&self, s: &GridWavefunction, t: f64) -> GridWavefunction {
        let spec = self.kit.spec();
        let mut hat = self.kit.to_momentum(s);
        for (k, v) in hat.iter_mut().enumerate() {
            let p = spec.p(k);
            *v *= C64::from_polar(1.0, -p * p * t / (2.0 * self.mass * HBAR));
        }
        self.kit.from_momentum(&hat)
    }
}

/// Strang-split evolution under a static potential sampled on the grid.
pub struct SplitStepPropagator {
    kit: FourierKit,
    pub mass: f64,
    potential: Vec<f64>,
    /// Upper bound on a single split step.
    pub dt_cap: f64,
}

impl SplitStepPropagator {
    pub fn new(kit: FourierKit, mass: f64, potential: Vec<f64>, dt_cap: f64) -> Self {
        assert_eq!(potential.len(), kit.spec().n);
        assert!(mass > 0.0 && dt_cap > 0.0);
        Self { kit, mass, potential, dt_cap }
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }
}

impl Propagator for SplitStepPropagator {
    type State = GridWavefunction;

    fn evolve(&self, s: &GridWavefunction, t: f64) -> GridWavefunction {
        if t == 0.0 {
            return s.clone();
        }
        let spec = self.kit.spec();
        let steps = (t.abs() / self.dt_cap).ceil().max(1.0) as usize;
        let dt = t / steps as f64;
        let half_v: Vec<C64> = self
            .potential
            .iter()
            .map(|&v| C64::from_polar(1.0, -v * dt / (2.0 * HBAR)))
            .collect();
        let kinetic: Vec<C64> = (0..spec.n)
            .map(|k| {
                let p = spec.p(k);
                C64::from_polar(1.0, -p * p * dt / (2.0 * self.mass * HBAR))
            })
            .collect();
        let mut cur = s.clone();
        for _ in 0..steps {
            for (v, ph) in cur.values.iter_mut().zip(&half_v) {
                *v *= ph;
            }
            let mut hat = self.kit.to_momentum(&cur);
            for (h, ph) in hat.iter_mut().zip(&kinetic) {
                *h *= ph;
            }
            cur = self.kit.from_momentum(&hat);
            for (v, ph) in cur.values.iter_mut().zip(&half_v) {
                *v *= ph;
            }
        }
        cur
    }
}

/// Position measure whose cells are contiguous index ranges.
pub struct PositionCells {
    spec: GridSpec,
    /// Cell `c` covers sample indices `bounds[c]..bounds[c+1]`.
    bounds: Vec<usize>,
}

impl PositionCells {
    /// Every sample its own cell: the finest position partition.
    pub fn per_point(spec: GridSpec) -> Self {
        Self { spec, bounds: (0..=spec.n).collect() }
    }

    /// Cells split at the given positions (snapped to sample boundaries).
    pub fn from_edges(spec: GridSpec, edges: &[f64]) -> Self {
        let mut bounds = vec![0usize];
        for &e in edges {
            let idx = ((e - spec.start) / spec.dx()).round().clamp(0.0, spec.n as f64) as usize;
            if idx > *bounds.last().unwrap() && idx < spec.n {
                bounds.push(idx);
            }
        }
        bounds.push(spec.n);
        Self { spec, bounds }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    fn cell_range(&self, c: usize) -> std::ops::Range<usize> {
        self.bounds[c]..self.bounds[c + 1]
    }

    /// Mask of cells whose midpoint satisfies the predicate.
    pub fn mask_where(&self, keep: impl Fn(f64) -> bool) -> CellMask {
        CellMask::from_fn(self.cell_count(), |c| keep(self.cell_point(c)[0]))
    }
}

impl MeasureBackend for PositionCells {
    type State = GridWavefunction;

    fn cell_count(&self) -> usize {
        self.bounds.len() - 1
    }

    fn point_dim(&self) -> usize {
        1
    }

    fn cell_point(&self, cell: usize) -> Vec<f64> {
        let r = self.cell_range(cell);
        vec![0.5 * (self.spec.x(r.start) + self.spec.x(r.end - 1))]
    }

    fn project(&self, s: &GridWavefunction, cells: &CellMask) -> GridWavefunction {
        debug_assert_eq!(s.spec, self.spec);
        let mut out = GridWavefunction::zeros(self.spec);
        for c in cells.indices() {
            let r = self.cell_range(c);
            out.values[r.clone()].copy_from_slice(&s.values[r]);
        }
        out
    }

    fn cell_cross(&self, a: &GridWavefunction, b: &GridWavefunction) -> Vec<C64> {
        let dx = self.spec.dx();
        (0..self.cell_count())
            .map(|c| {
                self.cell_range(c)
                    .map(|j| a.values[j].conj() * b.values[j])
                    .sum::<C64>()
                    * dx
            })
            .collect()
    }
}

/// Momentum measure whose cells are sets of FFT modes grouped by momentum
/// intervals.  Projections are exact (sharp mode masks), hence commute
/// exactly with free evolution.
pub struct MomentumCells {
    kit: FourierKit,
    /// `mode_cell[k]` is the cell owning FFT index `k`.
    mode_cell: Vec<usize>,
    n_cells: usize,
    points: Vec<f64>,
}

impl MomentumCells {
    /// Cells delimited by the given momentum thresholds; with thresholds
    /// `[a, b]` the cells are `p < a`, `a ≤ p < b`, `p ≥ b`.
    pub fn from_edges(kit: FourierKit, edges: &[f64]) -> Self {
        let spec = kit.spec();
        let mut sorted = edges.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n_cells = sorted.len() + 1;
        let mode_cell: Vec<usize> = (0..spec.n)
            .map(|k| {
                let p = spec.p(k);
                sorted.iter().position(|&e| p < e).unwrap_or(n_cells - 1)
            })
            .collect();
        // representative point: mean momentum of the cell's modes
        let mut sums = vec![0.0f64; n_cells];
        let mut counts = vec![0usize; n_cells];
        for (k, &c) in mode_cell.iter().enumerate() {
            sums[c] += spec.p(k);
            counts[c] += 1;
        }
        let points = sums
            .iter()
            .zip(&counts)
            .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
            .collect();
        Self { kit, mode_cell, n_cells, points }
    }

    /// Two cells split at `p = 0` (negative and nonnegative momenta).
    pub fn by_sign(kit: FourierKit) -> Self {
        Self::from_edges(kit, &[0.0])
    }

    pub fn spec(&self) -> GridSpec {
        self.kit.spec()
    }

    /// Masses per cell of the state's momentum density.
    pub fn mode_masses(&self, s: &GridWavefunction) -> Vec<f64> {
        let hat = self.kit.to_momentum(s);
        let dp = self.kit.spec().dp();
        let mut out = vec![0.0f64; self.n_cells];
        for (k, v) in hat.iter().enumerate() {
            out[self.mode_cell[k]] += v.norm_sqr() * dp;
        }
        out
    }
}

impl MeasureBackend for MomentumCells {
    type State = GridWavefunction;

    fn cell_count(&self) -> usize {
        self.n_cells
    }

    fn point_dim(&self) -> usize {
        1
    }

    fn cell_point(&self, cell: usize) -> Vec<f64> {
        vec![self.points[cell]]
    }

    fn project(&self, s: &GridWavefunction, cells: &CellMask) -> GridWavefunction {
        let mut hat = self.kit.to_momentum(s);
        for (k, v) in hat.iter_mut().enumerate() {
            if !cells.contains(self.mode_cell[k]) {
                *v = C64::new(0.0, 0.0);
            }
        }
        self.kit.from_momentum(&hat)
    }

    fn cell_cross(&self, a: &GridWavefunction, b: &GridWavefunction) -> Vec<C64> {
        let ha = self.kit.to_momentum(a);
        let hb = self.kit.to_momentum(b);
        let dp = self.kit.spec().dp();
        let mut out = vec![C64::new(0.0, 0.0); self.n_cells];
        for k in 0..ha.len() {
            out[self.mode_cell[k]] += ha[k].conj() * hb[k] * dp;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn packet(kit: &FourierKit, x0: f64, p0: f64) -> GridWavefunction {
        make_gaussian(kit, x0, p0, 1.0).unwrap().0
    }

    #[test]
    fn gaussian_is_normalized_up_to_truncation() {
        let kit = FourierKit::new(GridSpec::centered(1024, 64.0));
        let (psi, defect) = make_gaussian(&kit, 0.0, 3.0, 1.0).unwrap();
        assert!(defect < 1e-9, "truncation {defect}");
        assert!((psi.norm2() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_unrepresentable_packets() {
        let kit = FourierKit::new(GridSpec::centered(64, 64.0));
        assert!(make_gaussian(&kit, 0.0, 0.0, 1.0).is_err()); // dx = 1 > σx/8
        let kit = FourierKit::new(GridSpec::centered(64, 8.0));
        assert!(make_gaussian(&kit, 0.0, 0.0, 1.0).is_err()); // box < 20σx
    }

    #[test]
    fn parseval_is_exact() {
        let kit = FourierKit::new(GridSpec::centered(256, 32.0));
        let psi = packet(&kit, 1.0, 2.0);
        let hat = kit.to_momentum(&psi);
        assert!((kit.momentum_norm2(&hat) - psi.norm2()).abs() < 1e-13);
    }

    #[test]
    fn momentum_roundtrip_is_identity() {
        let kit = FourierKit::new(GridSpec::centered(256, 32.0));
        let psi = packet(&kit, -2.0, 1.5);
        let back = kit.from_momentum(&kit.to_momentum(&psi));
        assert!(psi.rel_distance(&back) < 1e-13);
    }

    #[test]
    fn momentum_density_peaks_at_packet_momentum() {
        let kit = FourierKit::new(GridSpec::centered(512, 64.0));
        let spec = kit.spec();
        let p0 = 32.0 * spec.dp(); // exactly on the momentum grid
        let psi = packet(&kit, 0.0, p0);
        let hat = kit.to_momentum(&psi);
        let expected = 1.0 / PI.sqrt(); // (πσp²)^{−1/2} at p = p0, σp = 1
        let k0 = (0..spec.n).find(|&k| spec.freq(k) == 32).unwrap();
        let got = hat[k0].norm_sqr();
        assert!(
            (got - expected).abs() < 1e-9 * expected,
            "density {got} vs {expected}"
        );
    }

    #[test]
    fn position_density_matches_closed_form() {
        let kit = FourierKit::new(GridSpec::centered(512, 64.0));
        let spec = kit.spec();
        let (x0, p0) = (1.5, 2.0);
        let psi = packet(&kit, x0, p0);
        // density convention: |ψ(x)|² = (√π σx)^{−1} e^{−(x−x0)²/σx²}, σx = 1
        let mut worst = 0.0f64;
        for j in 0..spec.n {
            let x = spec.x(j);
            let expected = (-(x - x0) * (x - x0)).exp() / PI.sqrt();
            worst = worst.max((psi.density(j) - expected).abs());
        }
        assert!(worst < 1e-9, "worst pointwise density error {worst}");
    }

    #[test]
    fn free_evolution_is_unitary_and_reversible() {
        let kit = FourierKit::new(GridSpec::centered(512, 64.0));
        let prop = FreePropagator::new(kit.clone(), 1.0);
        let psi = packet(&kit, 0.0, 2.0);
        let fwd = prop.evolve(&psi, 3.7);
        assert!((fwd.norm2() - psi.norm2()).abs() < 1e-12);
        let back = prop.evolve(&fwd, -3.7);
        assert!(psi.rel_distance(&back) < 1e-12);
    }

    #[test]
    fn split_step_with_zero_potential_matches_free() {
        let kit = FourierKit::new(GridSpec::centered(512, 64.0));
        let free = FreePropagator::new(kit.clone(), 1.0);
        let strang =
            SplitStepPropagator::new(kit.clone(), 1.0, vec![0.0; 512], 0.05);
        let psi = packet(&kit, 0.0, 1.0);
        let a = free.evolve(&psi, 2.0);
        let b = strang.evolve(&psi, 2.0);
        assert!(a.rel_distance(&b) < 1e-10);
    }

    #[test]
    fn split_step_constant_potential_is_a_global_phase() {
        let kit = FourierKit::new(GridSpec::centered(256, 32.0));
        let v0 = 0.7;
        let free = FreePropagator::new(kit.clone(), 1.0);
        let strang = SplitStepPropagator::new(kit.clone(), 1.0, vec![v0; 256], 0.05);
        let psi = packet(&kit, 0.0, 1.0);
        let t = 1.3;
        let expected = free.evolve(&psi, t).scale(C64::from_polar(1.0, -v0 * t / HBAR));
        let got = strang.evolve(&psi, t);
        assert!(expected.rel_distance(&got) < 1e-10);
    }

    #[test]
    fn harmonic_coherent_packet_tracks_classical_center() {
        // ω = 1 harmonic well; a displaced ground-state packet oscillates
        // with its center at x0·cos(ωt)
        let n = 1024;
        let kit = FourierKit::new(GridSpec::centered(n, 40.0));
        let spec = kit.spec();
        let v: Vec<f64> = (0..n).map(|j| 0.5 * spec.x(j) * spec.x(j)).collect();
        let strang = SplitStepPropagator::new(kit.clone(), 1.0, v, 2e-3);
        // ground width: σx = 1 in the density convention ⇒ σp = 1
        let x0 = 3.0;
        let (psi, _) = make_gaussian(&kit, x0, 0.0, 1.0).unwrap();
        let t = 2.0;
        let evolved = strang.evolve(&psi, t);
        let center: f64 = (0..n).map(|j| spec.x(j) * evolved.density(j)).sum::<f64>()
            * spec.dx();
        let expected = x0 * t.cos();
        assert!(
            (center - expected).abs() < 1e-3 * x0.abs(),
            "center {center} vs {expected}"
        );
    }

    #[test]
    fn position_cells_partition_and_project() {
        let kit = FourierKit::new(GridSpec::centered(256, 32.0));
        let cells = PositionCells::from_edges(kit.spec(), &[-4.0, 0.0, 4.0]);
        assert_eq!(cells.cell_count(), 4);
        let psi = packet(&kit, 0.0, 1.0);
        let all = CellMask::new_full(cells.cell_count());
        assert!(cells.project(&psi, &all).rel_distance(&psi) < 1e-14);
        let masses = cells.cell_masses(&psi);
        assert!((masses.iter().sum::<f64>() - psi.norm2()).abs() < 1e-12);
        let left = cells.mask_where(|x| x < 0.0);
        let right = left.complement();
        let pl = cells.project(&psi, &left);
        let pr = cells.project(&psi, &right);
        assert!(pl.add(&pr).rel_distance(&psi) < 1e-14);
        assert!(pl.inner(&pr).norm() < 1e-14);
    }

    #[test]
    fn momentum_cells_commute_with_free_flow() {
        let kit = FourierKit::new(GridSpec::centered(512, 64.0));
        let cells = MomentumCells::by_sign(kit.clone());
        let prop = FreePropagator::new(kit.clone(), 1.0);
        let plus = packet(&kit, 0.0, 2.0);
        let minus = packet(&kit, 0.0, -2.0);
        let psi = plus.add(&minus);
        let mask = CellMask::from_indices(cells.cell_count(), [1]);
        let a = prop.evolve(&cells.project(&psi, &mask), 1.7);
        let b = cells.project(&prop.evolve(&psi, 1.7), &mask);
        assert!(a.rel_distance(&b) < 1e-12);
        let masses = cells.mode_masses(&psi);
        assert!((masses[0] + masses[1] - psi.norm2()).abs() < 1e-12);
    }

    #[test]
    fn per_point_cells_recover_density() {
        let kit = FourierKit::new(GridSpec::centered(256, 32.0));
        let cells = PositionCells::per_point(kit.spec());
        let psi = packet(&kit, 0.5, 0.0);
        let masses = cells.cell_masses(&psi);
        for (j, &m) in masses.iter().enumerate() {
            assert!((m - psi.density(j) * kit.spec().dx()).abs() < 1e-15);
        }
    }
}
