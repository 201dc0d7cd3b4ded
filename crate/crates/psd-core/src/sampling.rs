//! Seeded random generators for states, measures, decompositions and trees.
//!
//! Everything is driven by an explicit [`ChaCha8Rng`] so that randomized
//! checks are reproducible from a single seed.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decomposition::{CoarseningMap, Decomposition};
use crate::error::{Error, Result};
use crate::finite::{Atom, AtomicSpectralMeasure, FiniteHamiltonian, StateVector};
use crate::measure::DiscreteScalarMeasure;
use crate::state::State;
use crate::tree::{Propagator, SpatialTree, TreeStage};
use crate::C64;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw from `[lo, hi)`.
pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let unit = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    lo + unit * (hi - lo)
}

pub fn uniform_usize(rng: &mut ChaCha8Rng, n: usize) -> usize {
    debug_assert!(n > 0);
    (rng.next_u64() % n as u64) as usize
}

pub fn random_complex(rng: &mut ChaCha8Rng, r: f64) -> C64 {
    C64::new(uniform(rng, -r, r), uniform(rng, -r, r))
}

/// Dense state with components uniform in the complex square of radius 1.
pub fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> StateVector {
    StateVector::from_components((0..dim).map(|_| random_complex(rng, 1.0)))
}

/// Unit-norm random state.
pub fn random_unit_state(rng: &mut ChaCha8Rng, dim: usize) -> StateVector {
    loop {
        let s = random_state(rng, dim);
        if s.norm() > 1e-3 {
            return s.normalized().expect("nonzero");
        }
    }
}

pub fn shuffle<T>(rng: &mut ChaCha8Rng, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        items.swap(i, uniform_usize(rng, i + 1));
    }
}

/// Haar-like random unitary from the QR factorization of a random matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, dim: usize) -> DMatrix<C64> {
    let m = DMatrix::from_fn(dim, dim, |_, _| random_complex(rng, 1.0));
    m.qr().q()
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> DMatrix<C64> {
    let m = DMatrix::from_fn(dim, dim, |_, _| random_complex(rng, scale));
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Pairwise separated random points in `[-5, 5]^dim`.
pub fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize, min_sep: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut attempts = 0u32;
    while out.len() < n {
        attempts += 1;
        assert!(attempts < 100_000, "point sampling failed to separate");
        let p: Vec<f64> = (0..dim).map(|_| uniform(rng, -5.0, 5.0)).collect();
        let far = out.iter().all(|q| {
            q.iter()
                .zip(&p)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
                >= min_sep
        });
        if far {
            out.push(p);
        }
    }
    out
}

/// Random composition of `total` into `parts` positive summands.
pub fn random_composition(rng: &mut ChaCha8Rng, total: usize, parts: usize) -> Vec<usize> {
    assert!(parts >= 1 && parts <= total);
    // choose parts−1 distinct cut positions in 1..total
    let mut cuts: Vec<usize> = (1..total).collect();
    shuffle(rng, &mut cuts);
    let mut cuts: Vec<usize> = cuts.into_iter().take(parts - 1).collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0;
    for c in cuts {
        out.push(c - prev);
        prev = c;
    }
    out.push(total - prev);
    out
}

/// Random atomic spectral measure: projectors onto random unitary column
/// blocks, atoms at separated random points.
pub fn random_measure(
    rng: &mut ChaCha8Rng,
    dim: usize,
    n_atoms: usize,
    point_dim: usize,
) -> AtomicSpectralMeasure {
    assert!(n_atoms >= 1 && n_atoms <= dim);
    let u = random_unitary(rng, dim);
    let sizes = random_composition(rng, dim, n_atoms);
    let points = random_points(rng, n_atoms, point_dim, 1e-2);
    let mut atoms = Vec::with_capacity(n_atoms);
    let mut col = 0;
    for (size, point) in sizes.into_iter().zip(points) {
        let block = u.columns(col, size);
        let projector = &block * block.adjoint();
        atoms.push(Atom { point, projector });
        col += size;
    }
    AtomicSpectralMeasure::new(atoms).expect("constructed measure is valid")
}

/// Hamiltonian diagonal in the measure (hence commuting with it).
pub fn random_commuting_hamiltonian(
    rng: &mut ChaCha8Rng,
    measure: &AtomicSpectralMeasure,
) -> FiniteHamiltonian {
    let lambdas: Vec<f64> = (0..measure.atoms().len())
        .map(|_| uniform(rng, -2.0, 2.0))
        .collect();
    FiniteHamiltonian::commuting_with(measure, &lambdas).expect("valid")
}

pub fn random_hamiltonian(rng: &mut ChaCha8Rng, dim: usize) -> FiniteHamiltonian {
    FiniteHamiltonian::new(random_hermitian(rng, dim, 1.0)).expect("hermitian by construction")
}

/// Random surjective labeling of the measure's atoms into `n` labels such
/// that every label captures a decent share of the state's mass; elements
/// are the corresponding measure applications, so the decomposition is an
/// exact split.
pub fn random_exact_split(
    rng: &mut ChaCha8Rng,
    measure: &AtomicSpectralMeasure,
    psi: &StateVector,
    n: usize,
) -> Result<(Decomposition<StateVector>, Vec<u8>)> {
    let atoms = measure.atoms().len();
    if n > atoms {
        return Err(Error::InvalidInput(alloc::string::String::from(
            "more labels than atoms",
        )));
    }
    let floor = 1e-4 * psi.norm2();
    for _ in 0..200 {
        let mut labels: Vec<u8> = (0..atoms).map(|k| (k % n) as u8).collect();
        shuffle(rng, &mut labels);
        let mut elements = Vec::with_capacity(n);
        let mut ok = true;
        for l in 0..n {
            let mask = crate::cells::CellMask::from_fn(atoms, |c| labels[c] == l as u8);
            let e = crate::proximity::MeasureBackend::project(measure, psi, &mask);
            if e.norm2() < floor {
                ok = false;
                break;
            }
            elements.push(e);
        }
        if !ok {
            continue;
        }
        if let Ok(d) = Decomposition::new(elements) {
            return Ok((d, labels));
        }
    }
    Err(Error::Numerical(alloc::string::String::from(
        "could not find a mass-balanced exact split",
    )))
}

/// Random decomposition with the given number of independent elements.
pub fn random_decomposition(
    rng: &mut ChaCha8Rng,
    dim: usize,
    n: usize,
) -> Decomposition<StateVector> {
    loop {
        let elements: Vec<StateVector> = (0..n).map(|_| random_state(rng, dim)).collect();
        if let Ok(d) = Decomposition::new(elements) {
            return d;
        }
    }
}

pub fn random_scalar_measure(
    rng: &mut ChaCha8Rng,
    n: usize,
    point_dim: usize,
) -> DiscreteScalarMeasure {
    let points = random_points(rng, n, point_dim, 1e-2);
    let weights = (0..n).map(|_| uniform(rng, 0.0, 1.0)).collect();
    DiscreteScalarMeasure::new(points, weights).expect("valid by construction")
}

/// A random tree refining along an orthonormal frame.
///
/// The construction projects the evolved root onto nested blocks of a
/// random unitary frame: evolving a stage forward and regrouping by the
/// next stage's partition reproduces its elements exactly, so the result is
/// a valid tree with orthogonal stages, suitable for exercising lineage,
/// branch and transport machinery against any Hamiltonian.
pub fn random_tree(
    rng: &mut ChaCha8Rng,
    dim: usize,
    depth: usize,
    max_leaves: usize,
) -> (SpatialTree<StateVector>, FiniteHamiltonian) {
    assert!(depth >= 1);
    let leaves = 2 + uniform_usize(rng, max_leaves.min(dim).saturating_sub(1).max(1));
    let leaves = leaves.min(dim).min(max_leaves);
    let h = random_hamiltonian(rng, dim);
    let frame = random_unitary(rng, dim);

    // leaf blocks: composition of the frame indices
    let sizes = random_composition(rng, dim, leaves);
    let mut leaf_blocks: Vec<Vec<usize>> = Vec::with_capacity(leaves);
    let mut start = 0;
    for s in sizes {
        leaf_blocks.push((start..start + s).collect());
        start += s;
    }

    // chain of partitions of the leaf set, refining down the stages:
    // cluster counts nondecreasing, ending at one cluster per leaf
    let mut counts: Vec<usize> = (0..depth.saturating_sub(1))
        .map(|_| 1 + uniform_usize(rng, leaves))
        .collect();
    counts.push(leaves);
    counts.sort_unstable();

    // assign leaves to clusters per stage, nested: build from the leaf end
    let mut stage_clusters: Vec<Vec<usize>> = Vec::with_capacity(depth); // leaf -> cluster
    stage_clusters.push((0..leaves).collect());
    for level in (0..depth - 1).rev() {
        let finer = stage_clusters.last().expect("nonempty");
        let finer_count = counts[level + 1];
        let coarser_count = counts[level];
        // merge the finer clusters into coarser ones surjectively
        let mut merge: Vec<usize> = (0..finer_count)
            .map(|c| c.min(coarser_count - 1))
            .collect();
        shuffle(rng, &mut merge);
        let leaf_to_coarse: Vec<usize> = finer.iter().map(|&c| merge[c]).collect();
        stage_clusters.push(leaf_to_coarse);
    }
    stage_clusters.reverse(); // now stage 0 first

    let mut times: Vec<f64> = (0..depth).map(|_| uniform(rng, 0.1, 2.0)).collect();
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    for (i, t) in times.iter_mut().enumerate() {
        *t += 0.05 * i as f64; // enforce strict ordering
    }
    let final_time = *times.last().expect("depth >= 1");

    // Leaf elements live at the final time; every earlier stage is a
    // back-propagated cluster sum of them, so evolving a stage forward and
    // regrouping reproduces the next stage without any commutation
    // assumption on the Hamiltonian.
    let (root, leaf_elements) = loop {
        let candidate = random_unit_state(rng, dim);
        let evolved = h.evolve(&candidate, final_time);
        let coeffs = frame.adjoint() * evolved.amplitudes();
        let els: Vec<StateVector> = leaf_blocks
            .iter()
            .map(|block| {
                let mut v = nalgebra::DVector::<C64>::zeros(dim);
                for &k in block {
                    v += nalgebra::DVector::from(frame.column(k)) * coeffs[k];
                }
                StateVector::new(v)
            })
            .collect();
        if els.iter().all(|e| e.norm() > 1e-2) {
            break (candidate, els);
        }
    };

    let mut stages = Vec::with_capacity(depth);
    for (i, leaf_to_cluster) in stage_clusters.iter().enumerate() {
        let n_clusters = counts[i];
        let elements: Vec<StateVector> = (0..n_clusters)
            .map(|cluster| {
                let sum = leaf_to_cluster
                    .iter()
                    .enumerate()
                    .filter(|&(_, &c)| c == cluster)
                    .map(|(leaf, _)| leaf_elements[leaf].clone())
                    .reduce(|a, b| a.add(&b))
                    .expect("cluster maps are surjective");
                h.evolve(&sum, times[i] - final_time)
            })
            .collect();
        let decomposition = Decomposition::new(elements).expect("independent by construction");
        let lineage = if i == 0 {
            CoarseningMap::new(vec![0; n_clusters], 1).expect("valid")
        } else {
            // cluster c of this stage maps to the cluster of the previous
            // stage containing any of its leaves
            let prev = &stage_clusters[i - 1];
            let mut map = vec![usize::MAX; n_clusters];
            for (leaf, &c) in leaf_to_cluster.iter().enumerate() {
                map[c] = prev[leaf];
            }
            CoarseningMap::new(map, counts[i - 1]).expect("nested by construction")
        };
        stages.push(TreeStage { time: times[i], decomposition, lineage });
    }

    let tree = SpatialTree::new(root, stages).expect("constructed tree is well formed");
    (tree, h)
}
