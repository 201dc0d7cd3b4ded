//! Randomized property suite for the proximity functional.
//!
//! Instances mix exact measure splits, perturbed splits and fully random
//! decompositions over seeded finite backends, so every assertion is
//! reproducible from the seeds below.

use psd_core::decomposition::Decomposition;
use psd_core::finite::{AtomicSpectralMeasure, StateVector};
use psd_core::proximity::{w_general, w_plus, w_two, MeasureBackend, WMode, WObjective};
use psd_core::sampling as smp;
use psd_core::state::State;
use psd_core::C64;
use rand_chacha::ChaCha8Rng;

fn random_measure_and_state(
    rng: &mut ChaCha8Rng,
    dim: usize,
    atoms: usize,
) -> (AtomicSpectralMeasure, StateVector) {
    let m = smp::random_measure(rng, dim, atoms, 1);
    let psi = smp::random_unit_state(rng, dim);
    (m, psi)
}

/// Exact split perturbed elementwise by `eps` of a random direction.
fn perturbed_split(
    rng: &mut ChaCha8Rng,
    measure: &AtomicSpectralMeasure,
    psi: &StateVector,
    n: usize,
    eps: f64,
) -> Decomposition<StateVector> {
    let (split, _) = smp::random_exact_split(rng, measure, psi, n).expect("split exists");
    let elements: Vec<StateVector> = split
        .elements()
        .iter()
        .map(|e| {
            let noise = smp::random_state(rng, measure.dim());
            e.add(&noise.scale(C64::new(eps * e.norm() / noise.norm(), 0.0)))
        })
        .collect();
    Decomposition::new(elements).expect("perturbation keeps independence")
}

#[test]
fn exact_splits_have_zero_proximity_and_faithful_witness() {
    let mut rng = smp::seeded_rng(101);
    for k in 0..120 {
        let dim = 3 + k % 4;
        let atoms = 2 + k % (dim - 1);
        let n = 2 + k % (atoms - 1).min(3).max(1);
        let (measure, psi) = random_measure_and_state(&mut rng, dim, atoms);
        let Ok((split, _)) = smp::random_exact_split(&mut rng, &measure, &psi, n) else {
            continue;
        };
        let report = w_general(&measure, &split, WMode::Exact).unwrap();
        assert!(report.certified);
        // resolution of a zero is set by cancellation noise in the Gram
        // accumulators, about sqrt(ε·‖Ψ‖/‖Ψᵢ‖)
        assert!(
            report.value < 1e-6,
            "exact split #{k} reported w = {}",
            report.value
        );
        // the witness labeling must reconstruct the elements
        for (l, element) in split.elements().iter().enumerate() {
            let mask = psd_core::cells::CellMask::from_fn(measure.cell_count(), |c| {
                report.witness[c] == l as u8
            });
            let reconstructed = measure.project(split.parent(), &mask);
            assert!(
                reconstructed.rel_distance(element) < 1e-7,
                "witness fails to reconstruct element {l} of instance #{k}"
            );
        }
    }
}

#[test]
fn generic_decompositions_have_positive_proximity() {
    let mut rng = smp::seeded_rng(103);
    for k in 0..60 {
        let dim = 3 + k % 4;
        let atoms = 2 + k % (dim - 1);
        let n = 2 + k % 2;
        let (measure, _) = random_measure_and_state(&mut rng, dim, atoms);
        let d = smp::random_decomposition(&mut rng, dim, n);
        let report = w_general(&measure, &d, WMode::Exact).unwrap();
        assert!(
            report.value > 1e-4,
            "random decomposition #{k} unexpectedly split: w = {}",
            report.value
        );
    }
}

#[test]
fn two_element_closed_form_matches_enumeration() {
    let mut rng = smp::seeded_rng(107);
    for k in 0..100 {
        let dim = 3 + k % 4;
        let atoms = 2 + k % (dim - 1);
        let measure = smp::random_measure(&mut rng, dim, atoms, 1);
        let d = smp::random_decomposition(&mut rng, dim, 2);
        let closed = w_two(&measure, &d.elements()[0], &d.elements()[1]).unwrap();
        let obj = WObjective::new(&measure, d.elements()).unwrap();
        let (enumerated, labels) = obj.brute_force().unwrap();
        assert!(
            (closed.value - enumerated).abs() < 1e-9,
            "closed form {} vs enumeration {} on #{k}",
            closed.value,
            enumerated
        );
        assert!((obj.value(&labels) - enumerated).abs() < 1e-9);
        assert!(closed.value <= 1.0 + 1e-12);
    }
}

#[test]
fn heuristic_upper_bounds_exact_value() {
    let mut rng = smp::seeded_rng(109);
    for k in 0..80 {
        let dim = 4 + k % 3;
        let atoms = dim.min(4 + k % 5);
        let n = 3 + k % 2;
        let (measure, psi) = random_measure_and_state(&mut rng, dim, atoms);
        if n > atoms {
            continue;
        }
        let d = if k % 2 == 0 {
            perturbed_split(&mut rng, &measure, &psi, n, 0.05 + 0.01 * (k % 20) as f64)
        } else {
            smp::random_decomposition(&mut rng, dim, n)
        };
        let obj = WObjective::new(&measure, d.elements()).unwrap();
        let (exact, _) = obj.brute_force().unwrap();
        let (upper, labels) = obj.heuristic();
        assert!(
            upper >= exact - 1e-12,
            "heuristic {upper} undercuts exact {exact} on #{k}"
        );
        assert!((obj.value(&labels) - upper).abs() < 1e-9);
    }
}

#[test]
fn coarsening_cannot_increase_proximity() {
    let mut rng = smp::seeded_rng(113);
    for k in 0..80 {
        let dim = 4 + k % 3;
        let atoms = dim.min(3 + k % 6);
        let n = 3 + k % 2;
        let (measure, psi) = random_measure_and_state(&mut rng, dim, atoms);
        let fine = if k % 3 == 0 {
            smp::random_decomposition(&mut rng, dim, n)
        } else if n <= atoms {
            perturbed_split(&mut rng, &measure, &psi, n, 0.1 + 0.02 * (k % 10) as f64)
        } else {
            continue;
        };
        // group the fine elements by a random surjection onto fewer labels
        let coarse_n = 2.max(n - 1);
        let mut assignment: Vec<usize> = (0..n).map(|i| i.min(coarse_n - 1)).collect();
        smp::shuffle(&mut rng, &mut assignment);
        let coarse_elements: Vec<StateVector> = (0..coarse_n)
            .map(|j| {
                assignment
                    .iter()
                    .enumerate()
                    .filter(|&(_, &a)| a == j)
                    .map(|(i, _)| fine.elements()[i].clone())
                    .reduce(|a, b| a.add(&b))
                    .expect("surjective")
            })
            .collect();
        let coarse = Decomposition::new(coarse_elements).expect("grouped sums stay independent");
        let wf = w_general(&measure, &fine, WMode::Exact).unwrap().value;
        let wc = w_general(&measure, &coarse, WMode::Exact).unwrap().value;
        assert!(
            wc <= wf + 1e-9,
            "coarse w {wc} exceeds fine w {wf} on instance #{k}"
        );
    }
}

#[test]
fn proximity_invariant_under_commuting_evolution() {
    let mut rng = smp::seeded_rng(127);
    for k in 0..60 {
        let dim = 4 + k % 3;
        let atoms = dim.min(3 + k % 4);
        let (measure, _) = random_measure_and_state(&mut rng, dim, atoms);
        let h = smp::random_commuting_hamiltonian(&mut rng, &measure);
        let d = smp::random_decomposition(&mut rng, dim, 2 + k % 2);
        let t = smp::uniform(&mut rng, -2.0, 2.0);
        let w0 = w_general(&measure, &d, WMode::Exact).unwrap().value;
        let wt = w_general(&measure, &d.evolve(&h, t), WMode::Exact)
            .unwrap()
            .value;
        assert!(
            (w0 - wt).abs() < 1e-8,
            "commuting evolution moved w from {w0} to {wt} on #{k}"
        );
    }
}

#[test]
fn orthogonality_tracks_proximity() {
    let mut rng = smp::seeded_rng(131);
    for k in 0..80 {
        let dim = 4 + k % 3;
        let atoms = dim.min(3 + k % 4);
        let n = 2 + k % 3;
        let (measure, psi) = random_measure_and_state(&mut rng, dim, atoms);
        if n > atoms {
            continue;
        }
        let d = perturbed_split(&mut rng, &measure, &psi, n, 0.02 + 0.03 * (k % 8) as f64);
        let v = w_general(&measure, &d, WMode::Exact).unwrap().value;
        let born = d.born().unwrap();
        let bound = 2.0 * v + v * v;
        assert!(
            born.max_pairwise_overlap <= bound + 1e-9,
            "overlap {} exceeds 2w+w² = {bound} on #{k}",
            born.max_pairwise_overlap
        );
    }
}

#[test]
fn time_supremum_equals_instant_value_under_commuting_flow() {
    let mut rng = smp::seeded_rng(137);
    for k in 0..25 {
        let dim = 4 + k % 3;
        let atoms = dim.min(3 + k % 3);
        let (measure, _) = random_measure_and_state(&mut rng, dim, atoms);
        let h = smp::random_commuting_hamiltonian(&mut rng, &measure);
        let d = smp::random_decomposition(&mut rng, dim, 2);
        let times: Vec<f64> = (0..12).map(|i| 0.25 * i as f64).collect();
        let instant = w_general(&measure, &d, WMode::Exact).unwrap().value;
        let sup = w_plus(&measure, &d, &h, &times, WMode::Exact).unwrap();
        assert!(sup.sampled && !sup.certified);
        assert!(sup.achieving_time.is_some());
        assert!(
            (sup.value - instant).abs() < 1e-8,
            "sampled supremum {} drifted from invariant value {instant} on #{k}",
            sup.value
        );
    }
}
