//! Mass geometry of states over an outcome space: centroids, spreads, and
//! branch trajectories.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::proximity::MeasureBackend;
use crate::state::State;
use crate::tree::{Branch, Propagator, SpatialTree};

/// Mass-weighted metric on a configuration space split into particle
/// blocks: `d(x,y)² = Σ_b (m_b/M) ‖x_b − y_b‖²` with `M = Σ m_b`.
///
/// With a single block this is the Euclidean metric regardless of the mass.
#[derive(Debug, Clone)]
pub struct ConfigMetric {
    masses: Vec<f64>,
    block_dims: Vec<usize>,
    total_mass: f64,
    point_dim: usize,
}

impl ConfigMetric {
    pub fn new(masses: Vec<f64>, block_dims: Vec<usize>) -> Result<Self> {
        if masses.len() != block_dims.len() || masses.is_empty() {
            return Err(Error::InvalidInput(String::from(
                "need one positive mass per block",
            )));
        }
        if masses.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::InvalidInput(String::from("masses must be positive")));
        }
        let total_mass = masses.iter().sum();
        let point_dim = block_dims.iter().sum();
        Ok(Self { masses, block_dims, total_mass, point_dim })
    }

    /// Single-particle Euclidean metric in `dim` dimensions.
    pub fn euclidean(dim: usize) -> Self {
        Self::new(vec![1.0], vec![dim]).expect("valid")
    }

    pub fn point_dim(&self) -> usize {
        self.point_dim
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.point_dim);
        assert_eq!(y.len(), self.point_dim);
        let mut acc = 0.0;
        let mut offset = 0;
        for (m, &d) in self.masses.iter().zip(&self.block_dims) {
            let mut block = 0.0;
            for k in offset..offset + d {
                let diff = x[k] - y[k];
                block += diff * diff;
            }
            acc += m / self.total_mass * block;
            offset += d;
        }
        acc.sqrt()
    }
}

/// Mass-weighted mean of the points.  Errors when the total mass vanishes.
pub fn centroid(points: &[Vec<f64>], masses: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = masses.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidInput(String::from(
            "zero-mass distribution has no centroid",
        )));
    }
    let dim = points.first().map_or(0, |p| p.len());
    let mut out = vec![0.0; dim];
    for (p, &m) in points.iter().zip(masses) {
        for (o, &v) in out.iter_mut().zip(p) {
            *o += m * v;
        }
    }
    for o in &mut out {
        *o /= total;
    }
    Ok(out)
}

/// Root-mean-square distance from `center` under the metric:
/// `sqrt(Σ_c mass_c d(p_c, center)² / Σ_c mass_c)`.
pub fn spread(
    points: &[Vec<f64>],
    masses: &[f64],
    metric: &ConfigMetric,
    center: &[f64],
) -> Result<f64> {
    let total: f64 = masses.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidInput(String::from("zero-mass distribution has no spread")));
    }
    let mut acc = 0.0;
    for (p, &m) in points.iter().zip(masses) {
        let d = metric.distance(p, center);
        acc += m * d * d;
    }
    Ok((acc / total).sqrt())
}

/// Minimized spread over all centers.
#[derive(Debug, Clone)]
pub struct GeneralSpread {
    pub minimizer: Vec<f64>,
    pub value: f64,
    /// Set when several well-separated centers reach the minimum within
    /// 1e-8; the reported minimizer is then one of them.
    pub tie: bool,
}

/// Minimizes the spread functional `τ(x) = sqrt(Σ mass_c d(p_c, x)²/Σ mass)`
/// over centers `x` by coarse-to-fine pattern search seeded at the best
/// support points.
///
/// For quadratic metrics such as [`ConfigMetric`] the minimizer is the
/// centroid; the search exists so that the functional stays meaningful for
/// callers probing non-quadratic metrics and reports ties honestly.
pub fn general_spread(
    points: &[Vec<f64>],
    masses: &[f64],
    metric: &ConfigMetric,
) -> Result<GeneralSpread> {
    let total: f64 = masses.iter().sum();
    if !(total > 0.0) || points.is_empty() {
        return Err(Error::InvalidInput(String::from("zero-mass distribution has no spread")));
    }
    let dim = metric.point_dim();
    let tau = |x: &[f64]| -> f64 {
        let mut acc = 0.0;
        for (p, &m) in points.iter().zip(masses) {
            let d = metric.distance(p, x);
            acc += m * d * d;
        }
        (acc / total).sqrt()
    };

    // domain scale from the weighted support
    let mut lo = points[0].clone();
    let mut hi = points[0].clone();
    for p in points {
        for k in 0..dim {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let scale = lo
        .iter()
        .zip(&hi)
        .map(|(&l, &h)| h - l)
        .fold(0.0f64, f64::max)
        .max(1e-12);

    // candidate seeds: best few support points (by τ), deduplicated
    let mut scored: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter(|&(i, _)| masses[i] > 0.0)
        .map(|(i, p)| (tau(p), i))
        .collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
    let best_tau = scored.first().map_or(f64::INFINITY, |s| s.0);
    let seeds: Vec<Vec<f64>> = scored
        .iter()
        .take_while(|(v, _)| *v <= best_tau + 1e-6 * best_tau.max(1.0))
        .take(8)
        .map(|&(_, i)| points[i].clone())
        .collect();

    let refine = |seed: &[f64]| -> (Vec<f64>, f64) {
        let mut x = seed.to_vec();
        let mut v = tau(&x);
        let mut step = scale / 2.0;
        while step > 1e-10 * scale {
            let mut improved = false;
            for k in 0..dim {
                for dir in [-1.0, 1.0] {
                    let mut y = x.clone();
                    y[k] += dir * step;
                    let vy = tau(&y);
                    if vy < v {
                        v = vy;
                        x = y;
                        improved = true;
                    }
                }
            }
            if !improved {
                step /= 2.0;
            }
        }
        (x, v)
    };

    let mut minima: Vec<(Vec<f64>, f64)> = Vec::new();
    for seed in &seeds {
        let (x, v) = refine(seed);
        minima.push((x, v));
    }
    minima.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite"));
    let (best_x, best_v) = minima[0].clone();
    let tie = minima.iter().skip(1).any(|(x, v)| {
        (v - best_v).abs() <= 1e-8 * best_v.max(1.0)
            && x.iter()
                .zip(&best_x)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max)
                > 1e-6 * scale
    });
    Ok(GeneralSpread { minimizer: best_x, value: best_v, tie })
}

/// Sampled path of a point through the outcome space.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

/// Centroid of a state's cell-mass distribution under a backend.
pub fn state_centroid<B: MeasureBackend>(backend: &B, s: &B::State) -> Result<Vec<f64>> {
    centroid(&backend.cell_points(), &backend.cell_masses(s))
}

/// Centroid trajectory of one branch of a tree: the branch's occupying
/// state at each sample time, reduced to its mass centroid.
pub fn branch_trajectory<B, P, S>(
    backend: &B,
    tree: &SpatialTree<S>,
    propagator: &P,
    branch: &Branch,
    times: &[f64],
) -> Result<Trajectory>
where
    S: State,
    B: MeasureBackend<State = S>,
    P: Propagator<State = S>,
{
    let cell_points = backend.cell_points();
    let mut points = Vec::with_capacity(times.len());
    for &t in times {
        let s = tree.branch_state(propagator, branch, t);
        points.push(centroid(&cell_points, &backend.cell_masses(&s))?);
    }
    Ok(Trajectory { times: times.to_vec(), points })
}
