//! Scalar measures induced by states and the quantitative partition
//! machinery built on them.
//!
//! `G_Ψ(Δ) = ‖G(Δ)Ψ‖²` is an ordinary finite measure on the outcome space.
//! This module handles such measures in discretized form (finite support
//! with nonnegative weights): dilation families around a region, surrogate
//! regions whose mass stays within a budget of the original, and the
//! refinement of an approximate partition into an exact one with certified
//! projection errors.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::cells::CellMask;
use crate::error::{Error, Result};
use crate::finite::{Region, POINT_TOL};

/// Finite-support nonnegative measure on the outcome space.
///
/// Support points are expected to be pairwise distinct; this is validated
/// for supports up to 1024 points (larger supports, typically grids, are
/// trusted to come from constructions that guarantee it).
#[derive(Debug, Clone)]
pub struct DiscreteScalarMeasure {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl DiscreteScalarMeasure {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::InvalidInput(String::from(
                "need one weight per support point",
            )));
        }
        let dim = points.first().map_or(0, |p| p.len());
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidInput(String::from("mixed point dimensions")));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < -1e-15) {
            return Err(Error::InvalidInput(String::from("weights must be nonnegative")));
        }
        if points.len() <= 1024 {
            for i in 0..points.len() {
                for j in (i + 1)..points.len() {
                    if euclid(&points[i], &points[j]) <= POINT_TOL {
                        return Err(Error::InvalidInput(format!(
                            "support points {i} and {j} coincide"
                        )));
                    }
                }
            }
        }
        let weights = weights.into_iter().map(|w| w.max(0.0)).collect();
        Ok(Self { points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Support points lying in the region.
    pub fn support_mask(&self, region: &Region) -> CellMask {
        CellMask::from_fn(self.len(), |i| region.contains(&self.points[i]))
    }

    pub fn mask_mass(&self, mask: &CellMask) -> f64 {
        mask.indices().map(|i| self.weights[i]).sum()
    }

    pub fn region_mass(&self, region: &Region) -> f64 {
        self.mask_mass(&self.support_mask(region))
    }

    /// Largest pointwise mass difference against another measure, matching
    /// support points within `point_tol`; unmatched points contribute their
    /// full mass.
    pub fn mass_discrepancy(&self, other: &Self, point_tol: f64) -> f64 {
        let mut worst = 0.0f64;
        let mut matched = alloc::vec![false; other.len()];
        for (p, &w) in self.points.iter().zip(&self.weights) {
            let mut found = None;
            for (j, q) in other.points.iter().enumerate() {
                if euclid(p, q) <= point_tol {
                    found = Some(j);
                    break;
                }
            }
            match found {
                Some(j) => {
                    matched[j] = true;
                    worst = worst.max((w - other.weights[j]).abs());
                }
                None => worst = worst.max(w),
            }
        }
        for (j, &m) in matched.iter().enumerate() {
            if !m {
                worst = worst.max(other.weights[j]);
            }
        }
        worst
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Monotone family of dilations of a base region.
#[derive(Debug, Clone)]
pub struct RegionFamily {
    pub base: Region,
    /// Ascending dilation radii; radius 0 denotes the base itself.
    pub radii: Vec<f64>,
}

impl RegionFamily {
    pub fn new(base: Region, mut radii: Vec<f64>) -> Self {
        radii.sort_by(|a, b| a.partial_cmp(b).expect("finite radii"));
        Self { base, radii }
    }

    pub fn region(&self, k: usize) -> Region {
        let r = self.radii[k];
        if r == 0.0 {
            self.base.clone()
        } else {
            Region::Dilation { base: alloc::boxed::Box::new(self.base.clone()), radius: r }
        }
    }

    /// Mass of each family member under the measure (nondecreasing in `k`).
    pub fn masses(&self, measure: &DiscreteScalarMeasure) -> Vec<f64> {
        (0..self.radii.len())
            .map(|k| measure.region_mass(&self.region(k)))
            .collect()
    }
}

/// Outcome of [`continuity_surrogate`].
#[derive(Debug, Clone)]
pub struct SurrogateReport {
    /// Dilation of the base region (or the base itself at radius zero).
    pub region: Region,
    pub radius: f64,
    /// Mass the dilation adds beyond the base region.
    pub added_mass: f64,
    /// Mass sitting exactly at the chosen radius (zero by construction: the
    /// radius is picked strictly between support distances).
    pub boundary_mass: f64,
}

/// Picks the largest dilation of `region` whose added mass stays within
/// `mass_budget`, with the radius chosen strictly between consecutive
/// support-point distances so that no support point sits on the dilation
/// boundary.
///
/// With a budget below the smallest nearby point mass this degenerates to a
/// radius below the closest outside point, adding nothing.  Regions without
/// a distance function (complements) are rejected.
pub fn continuity_surrogate(
    measure: &DiscreteScalarMeasure,
    region: &Region,
    mass_budget: f64,
) -> Result<SurrogateReport> {
    if !(mass_budget >= 0.0) {
        return Err(Error::InvalidInput(String::from("mass budget must be nonnegative")));
    }
    let mut outside: Vec<(f64, f64)> = Vec::new(); // (distance, weight)
    for (p, &w) in measure.points().iter().zip(measure.weights()) {
        let d = region.distance(p).ok_or_else(|| {
            Error::InvalidInput(String::from(
                "region has no distance function, cannot build dilations",
            ))
        })?;
        if d > POINT_TOL && !region.contains(p) {
            outside.push((d, w));
        }
    }
    if outside.is_empty() {
        return Ok(SurrogateReport {
            region: region.clone(),
            radius: 0.0,
            added_mass: 0.0,
            boundary_mass: 0.0,
        });
    }
    outside.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distances"));

    // candidate radii strictly between distinct consecutive distances, plus
    // one below the closest point and one beyond the farthest
    let mut candidates: Vec<f64> = alloc::vec![outside[0].0 / 2.0];
    for w in outside.windows(2) {
        if w[1].0 - w[0].0 > POINT_TOL {
            candidates.push((w[0].0 + w[1].0) / 2.0);
        }
    }
    candidates.push(outside.last().expect("nonempty").0 + 1.0);

    let mut best = candidates[0];
    let mut best_mass = 0.0;
    for &r in &candidates {
        let mass: f64 = outside
            .iter()
            .take_while(|&&(d, _)| d <= r)
            .map(|&(_, w)| w)
            .sum();
        if mass <= mass_budget && r > best {
            best = r;
            best_mass = mass;
        }
    }
    Ok(SurrogateReport {
        region: Region::Dilation { base: alloc::boxed::Box::new(region.clone()), radius: best },
        radius: best,
        added_mass: best_mass,
        boundary_mass: 0.0,
    })
}

/// Certificate accompanying an exact partition built from an approximate
/// one: the projection residuals actually measured and the bounds they are
/// guaranteed to satisfy.
#[derive(Debug, Clone)]
pub struct PartitionCertificate {
    pub n: usize,
    pub delta: f64,
    /// Guaranteed bound `2(n−1)²δ` on every subset residual.
    pub epsilon: f64,
    /// `‖G(Δ_i)Ψ − G(Σ_i)Ψ‖` per stage.
    pub stage_residuals: Vec<f64>,
    /// Their guaranteed bounds: `(2i−1)δ` for stages before the last,
    /// `(n−1)²δ` for the last.
    pub stage_bounds: Vec<f64>,
    pub max_subset_residual: f64,
}

/// Refines a disjoint family of regions covering the support into an exact
/// partition with certified projection errors.
///
/// Stage `i < n` dilates its region within mass budget `δ²` and keeps what
/// earlier stages have not claimed; the last stage takes the rest.  For the
/// induced scalar measure this guarantees stage residuals `(2i−1)δ` and
/// subset residuals `2(n−1)²δ`, which the returned certificate also
/// verifies numerically (all subsets up to n = 12).
pub fn certified_partition(
    measure: &DiscreteScalarMeasure,
    base: &[Region],
    delta: f64,
) -> Result<(Vec<CellMask>, PartitionCertificate)> {
    let n = base.len();
    if n < 2 {
        return Err(Error::InvalidInput(String::from("need at least two regions")));
    }
    if n > 12 {
        return Err(Error::ResourceLimit(format!(
            "subset certification over {n} regions exceeds the supported 12"
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidInput(String::from("delta must be positive")));
    }
    let support = measure.len();
    let base_masks: Vec<CellMask> = base.iter().map(|r| measure.support_mask(r)).collect();
    if !crate::cells::is_partition(&base_masks, support) {
        return Err(Error::InvalidInput(String::from(
            "base regions must partition the support",
        )));
    }

    let budget = delta * delta;
    let mut claimed = CellMask::new_empty(support);
    let mut sigma: Vec<CellMask> = Vec::with_capacity(n);
    for region in base.iter().take(n - 1) {
        let surrogate = continuity_surrogate(measure, region, budget)?;
        let dilated = measure.support_mask(&surrogate.region);
        let stage = dilated.difference(&claimed);
        claimed = claimed.union(&dilated);
        sigma.push(stage);
    }
    sigma.push(claimed.complement());

    let mut stage_residuals = Vec::with_capacity(n);
    let mut stage_bounds = Vec::with_capacity(n);
    for i in 0..n {
        stage_residuals.push(projection_residual(measure, &base_masks[i], &sigma[i]));
        let bound = if i + 1 < n {
            (2 * (i + 1) - 1) as f64 * delta
        } else {
            ((n - 1) * (n - 1)) as f64 * delta
        };
        stage_bounds.push(bound);
    }

    let mut max_subset_residual = 0.0f64;
    let full = (1usize << n) - 1;
    for subset in 1..full {
        let mut base_union = CellMask::new_empty(support);
        let mut sigma_union = CellMask::new_empty(support);
        for i in 0..n {
            if subset & (1 << i) != 0 {
                base_union = base_union.union(&base_masks[i]);
                sigma_union = sigma_union.union(&sigma[i]);
            }
        }
        max_subset_residual =
            max_subset_residual.max(projection_residual(measure, &base_union, &sigma_union));
    }

    let certificate = PartitionCertificate {
        n,
        delta,
        epsilon: 2.0 * ((n - 1) * (n - 1)) as f64 * delta,
        stage_residuals,
        stage_bounds,
        max_subset_residual,
    };
    Ok((sigma, certificate))
}

/// `‖G(A)Ψ − G(B)Ψ‖` from the scalar measure: the square root of the mass
/// of the symmetric difference (the two projection differences are
/// orthogonal).
fn projection_residual(measure: &DiscreteScalarMeasure, a: &CellMask, b: &CellMask) -> f64 {
    let forward = measure.mask_mass(&a.difference(b));
    let backward = measure.mask_mass(&b.difference(a));
    (forward + backward).max(0.0).sqrt()
}

/// Residual trace of a family of scalar measures against a limit measure
/// over a fixed set of test regions.
#[derive(Debug, Clone)]
pub struct WeakConvergenceReport {
    /// Per family member: the largest |mass difference| over the test
    /// regions.
    pub residuals: Vec<f64>,
    /// Whether the final residual is within tolerance.
    pub converged: bool,
    /// Test regions still violating the tolerance at the final member.
    pub offending: Vec<usize>,
}

/// Compares a measure family against its putative limit on test regions.
pub fn weak_convergence_check(
    family: &[DiscreteScalarMeasure],
    limit: &DiscreteScalarMeasure,
    test_regions: &[Region],
    tolerance: f64,
) -> Result<WeakConvergenceReport> {
    if family.is_empty() || test_regions.is_empty() {
        return Err(Error::InvalidInput(String::from(
            "need at least one measure and one test region",
        )));
    }
    let limit_masses: Vec<f64> = test_regions.iter().map(|r| limit.region_mass(r)).collect();
    let mut residuals = Vec::with_capacity(family.len());
    let mut last_diffs: Vec<f64> = Vec::new();
    for m in family {
        let diffs: Vec<f64> = test_regions
            .iter()
            .zip(&limit_masses)
            .map(|(r, &lm)| (m.region_mass(r) - lm).abs())
            .collect();
        residuals.push(diffs.iter().fold(0.0f64, |a, &b| a.max(b)));
        last_diffs = diffs;
    }
    let converged = *residuals.last().expect("nonempty") <= tolerance;
    let offending = if converged {
        Vec::new()
    } else {
        last_diffs
            .iter()
            .enumerate()
            .filter_map(|(i, &d)| (d > tolerance).then_some(i))
            .collect()
    };
    Ok(WeakConvergenceReport { residuals, converged, offending })
}
