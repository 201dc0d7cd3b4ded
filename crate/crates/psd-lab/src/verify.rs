//! Randomized self-verification over the exact finite backend.
//!
//! The `verify` subcommand and the acceptance tests run the same drivers,
//! so a reported pass means the same thing in both places.  Every suite is
//! a pure function of its seed and trial count.

use std::fs;
use std::path::Path;

use psd_core::cells::{is_partition, CellMask};
use psd_core::decomposition::{is_finer, Decomposition};
use psd_core::finite::{AtomicSpectralMeasure, StateVector};
use psd_core::finite::Region;
use psd_core::measure::{certified_partition, DiscreteScalarMeasure};
use psd_core::proximity::{w_general, MeasureBackend, WMode, WObjective};
use psd_core::sampling as smp;
use psd_core::state::State;
use psd_core::C64;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::formats::{write_json, CheckOutcome, RunReport, VerifyConfig};
use crate::scenario::{RunOutput, ScenarioError};

/// Accumulates worst-case deviations and failures for one named property.
struct Tally {
    name: &'static str,
    instances: usize,
    failures: usize,
    worst: f64,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self { name, instances: 0, failures: 0, worst: 0.0 }
    }

    fn record(&mut self, passed: bool, deviation: f64) {
        self.instances += 1;
        if !passed {
            self.failures += 1;
        }
        self.worst = self.worst.max(deviation);
    }

    fn outcome(self) -> CheckOutcome {
        if self.instances == 0 {
            return CheckOutcome::skip(self.name, "no instances".into());
        }
        CheckOutcome::of(
            self.name,
            self.failures == 0,
            format!(
                "{} instances, {} failures, worst deviation {:.3e}",
                self.instances, self.failures, self.worst
            ),
        )
    }
}

fn random_measure_and_state(
    rng: &mut ChaCha8Rng,
    dim: usize,
    atoms: usize,
) -> (AtomicSpectralMeasure, StateVector) {
    let m = smp::random_measure(rng, dim, atoms, 1);
    let psi = smp::random_unit_state(rng, dim);
    (m, psi)
}

fn perturbed_split(
    rng: &mut ChaCha8Rng,
    measure: &AtomicSpectralMeasure,
    psi: &StateVector,
    n: usize,
    eps: f64,
) -> Option<Decomposition<StateVector>> {
    let (split, _) = smp::random_exact_split(rng, measure, psi, n).ok()?;
    let elements: Vec<StateVector> = split
        .elements()
        .iter()
        .map(|e| {
            let noise = smp::random_state(rng, measure.dim());
            e.add(&noise.scale(C64::new(eps * e.norm() / noise.norm(), 0.0)))
        })
        .collect();
    Decomposition::new(elements).ok()
}

/// Proximity-functional invariants on random finite instances: exact splits
/// score zero and their witness labelings rebuild the elements, generic
/// decompositions score strictly positive, the two-element closed form
/// matches enumeration, heuristics stay above the infimum, coarsening never
/// increases the value, commuting evolution preserves it, and Born overlaps
/// obey the `2w + w²` bound.
pub fn split_suite(seed: u64, trials: usize, inject_fault: bool) -> Vec<CheckOutcome> {
    let mut zero = Tally::new("exact-splits-score-zero");
    let mut witness = Tally::new("near-zero-witness-recovers-split");
    let mut positive = Tally::new("generic-decompositions-score-positive");
    let mut two = Tally::new("two-element-closed-form-matches-enumeration");
    let mut upper = Tally::new("heuristic-upper-bounds-infimum");
    let mut coarse = Tally::new("coarsening-never-increases-value");
    let mut commute = Tally::new("commuting-evolution-preserves-value");
    let mut ortho = Tally::new("born-overlaps-obey-proximity-bound");

    // a deliberately impossible tolerance proves failures are detected
    let zero_tol = if inject_fault { 1e-18 } else { 1e-6 };

    let mut rng = smp::seeded_rng(seed);
    for k in 0..trials {
        let dim = 3 + k % 4;
        let atoms = 2 + k % (dim - 1);
        let n = 2 + k % (atoms - 1).min(3).max(1);
        let (measure, psi) = random_measure_and_state(&mut rng, dim, atoms);

        if let Ok((split, _)) = smp::random_exact_split(&mut rng, &measure, &psi, n) {
            let report = w_general(&measure, &split, WMode::Exact).expect("exact evaluation");
            zero.record(report.value < zero_tol, report.value);

            // converse direction: a near-zero score comes with a labeling
            // whose projections rebuild the elements
            let mut worst = 0.0f64;
            for (l, element) in split.elements().iter().enumerate() {
                let mask =
                    CellMask::from_fn(measure.cell_count(), |c| report.witness[c] == l as u8);
                let reconstructed = measure.project(split.parent(), &mask);
                worst = worst.max(reconstructed.rel_distance(element));
            }
            witness.record(worst < 1e-6, worst);
        }

        let generic = smp::random_decomposition(&mut rng, dim, 2 + k % 2);
        let wg = w_general(&measure, &generic, WMode::Exact).expect("exact evaluation").value;
        positive.record(wg > 1e-4, (1e-4 - wg).max(0.0));

        if let Some(d) = perturbed_split(&mut rng, &measure, &psi, n, 0.02 + 0.03 * (k % 8) as f64)
        {
            let exact = w_general(&measure, &d, WMode::Exact).expect("exact evaluation").value;

            // invariance is checked away from the zero floor, where two
            // evaluations agree to accumulator roundoff
            let h = smp::random_commuting_hamiltonian(&mut rng, &measure);
            let t = smp::uniform(&mut rng, -2.0, 2.0);
            let wt = w_general(&measure, &d.evolve(&h, t), WMode::Exact)
                .expect("exact evaluation")
                .value;
            let gap = (exact - wt).abs();
            commute.record(gap < 1e-8, gap);
            let heur = w_general(&measure, &d, WMode::Heuristic)
                .expect("heuristic evaluation")
                .value;
            upper.record(heur >= exact - 1e-12, (exact - heur).max(0.0));

            let born = d.born().expect("born weights");
            let bound = 2.0 * exact + exact * exact;
            ortho.record(
                born.max_pairwise_overlap <= bound + 1e-9,
                (born.max_pairwise_overlap - bound).max(0.0),
            );

            if d.len() == 2 {
                let obj = WObjective::new(&measure, d.elements()).expect("objective");
                let (brute, _) = obj.brute_force().expect("within cap");
                let gap = (exact - brute).abs();
                two.record(gap < 1e-9, gap);
            }

            if d.len() >= 3 {
                let coarse_n = d.len() - 1;
                let mut assignment: Vec<usize> =
                    (0..d.len()).map(|i| i.min(coarse_n - 1)).collect();
                smp::shuffle(&mut rng, &mut assignment);
                let coarse_elements: Vec<StateVector> = (0..coarse_n)
                    .map(|j| {
                        assignment
                            .iter()
                            .enumerate()
                            .filter(|&(_, &a)| a == j)
                            .map(|(i, _)| d.elements()[i].clone())
                            .reduce(|a, b| a.add(&b))
                            .expect("nonempty group")
                    })
                    .collect();
                if let Ok(cd) = Decomposition::new(coarse_elements) {
                    let wc = w_general(&measure, &cd, WMode::Exact)
                        .expect("exact evaluation")
                        .value;
                    coarse.record(wc <= exact + 1e-9, (wc - exact).max(0.0));
                }
            }
        }
    }
    vec![
        zero.outcome(),
        witness.outcome(),
        positive.outcome(),
        two.outcome(),
        upper.outcome(),
        coarse.outcome(),
        commute.outcome(),
        ortho.outcome(),
    ]
}

/// Structural invariants of randomly generated branching histories:
/// stagewise refinement of the evolved root, leaf/branch bijection with
/// lineage-consistent ancestor chains and weights summing to one, lineage
/// recovery by transport, and propagation of pairwise overlaps (hence of
/// orthogonality) from fine stages to their coarsenings.
pub fn tree_suite(seed: u64, trials: usize) -> Vec<CheckOutcome> {
    let mut valid = Tally::new("trees-refine-their-evolved-root");
    let mut bijection = Tally::new("branches-biject-with-leaves");
    let mut transport = Tally::new("lineage-recovered-by-transport");
    let mut propagate = Tally::new("overlaps-aggregate-along-lineage");

    let mut rng = smp::seeded_rng(seed);
    for k in 0..trials {
        let dim = 6 + k % 3;
        let depth = 1 + k % 3;
        let (tree, h) = smp::random_tree(&mut rng, dim, depth, 6);
        valid.record(tree.validate(&h).ok, 0.0);

        match tree.branches() {
            Ok(branches) => {
                let mut leaves: Vec<usize> = branches.iter().map(|b| b.leaf).collect();
                leaves.sort_unstable();
                leaves.dedup();
                let total: f64 = branches.iter().map(|b| b.weight).sum();
                let chains = branches.iter().all(|b| {
                    b.ancestors.last() == Some(&b.leaf)
                        && b.ancestors.len() == tree.stages().len()
                        && (1..b.ancestors.len()).all(|i| {
                            tree.stages()[i].lineage.fine_to_coarse[b.ancestors[i]]
                                == b.ancestors[i - 1]
                        })
                });
                let ok = leaves.len() == tree.leaf_count()
                    && branches.len() == tree.leaf_count()
                    && chains
                    && (total - 1.0).abs() < 1e-8;
                bijection.record(ok, (total - 1.0).abs());
            }
            Err(_) => bijection.record(false, f64::INFINITY),
        }

        let mut recovered = true;
        let mut overlap_gap = 0.0f64;
        for i in 1..tree.stages().len() {
            let prev = &tree.stages()[i - 1];
            let cur = &tree.stages()[i];
            let moved = prev.decomposition.evolve(&h, cur.time - prev.time);
            match is_finer(&cur.decomposition, &moved) {
                Ok(Some(map)) => {
                    if map.fine_to_coarse != cur.lineage.fine_to_coarse {
                        recovered = false;
                    }
                }
                _ => recovered = false,
            }

            // a coarse overlap is the sum of the overlaps of its refining
            // groups, so orthogonal fine stages coarsen to orthogonal ones
            let lineage = &cur.lineage.fine_to_coarse;
            for a in 0..moved.len() {
                for b in 0..moved.len() {
                    let mut sum = C64::new(0.0, 0.0);
                    for (fa, &ca) in lineage.iter().enumerate() {
                        for (fb, &cb) in lineage.iter().enumerate() {
                            if ca == a && cb == b {
                                sum += cur.decomposition.elements()[fa]
                                    .inner(&cur.decomposition.elements()[fb]);
                            }
                        }
                    }
                    let direct = moved.elements()[a].inner(&moved.elements()[b]);
                    overlap_gap = overlap_gap.max((direct - sum).norm());
                }
            }
        }
        transport.record(recovered, 0.0);
        propagate.record(overlap_gap < 1e-8, overlap_gap);
    }
    vec![valid.outcome(), bijection.outcome(), transport.outcome(), propagate.outcome()]
}

fn interval_base(measure: &DiscreteScalarMeasure, n_regions: usize) -> Option<Vec<Region>> {
    let mut xs: Vec<f64> = measure.points().iter().map(|p| p[0]).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n_points = xs.len();
    let mut cuts = Vec::with_capacity(n_regions - 1);
    for j in 1..n_regions {
        let idx = j * (n_points - 1) / n_regions;
        cuts.push(0.5 * (xs[idx] + xs[idx + 1]));
    }
    cuts.dedup();
    if cuts.is_empty() {
        return None;
    }
    let mut base = Vec::with_capacity(cuts.len() + 1);
    base.push(Region::half_line_below(cuts[0]));
    for w in cuts.windows(2) {
        base.push(Region::interval(w[0], w[1]));
    }
    base.push(Region::half_line_above(*cuts.last().unwrap()));
    Some(base)
}

fn residual(measure: &DiscreteScalarMeasure, a: &CellMask, b: &CellMask) -> f64 {
    let sym = a.difference(b).union(&b.difference(a));
    measure.mask_mass(&sym).max(0.0).sqrt()
}

/// Certified-partition invariants on random scalar measures: the refined
/// cells partition the support, every stage and subset residual is within
/// its certified bound, and the reported maxima match recomputation.
pub fn partition_suite(seed: u64, trials: usize) -> Vec<CheckOutcome> {
    let mut partition = Tally::new("refined-cells-partition-support");
    let mut stages = Tally::new("stage-residuals-within-bounds");
    let mut subsets = Tally::new("subset-residuals-within-epsilon");

    let mut rng = smp::seeded_rng(seed);
    for k in 0..trials {
        let n_regions = 2 + k % 4;
        let n_points = 3 * n_regions + k % 20;
        let measure = smp::random_scalar_measure(&mut rng, n_points, 1);
        let delta = smp::uniform(&mut rng, 0.02, 0.3);
        let Some(base) = interval_base(&measure, n_regions) else {
            continue;
        };
        let Ok((masks, cert)) = certified_partition(&measure, &base, delta) else {
            partition.record(false, f64::INFINITY);
            continue;
        };
        partition.record(is_partition(&masks, n_points), 0.0);

        let base_masks: Vec<CellMask> = base.iter().map(|r| measure.support_mask(r)).collect();
        let n = base.len();
        let mut stage_ok = cert.epsilon == 2.0 * ((n - 1) * (n - 1)) as f64 * cert.delta;
        let mut worst_gap = 0.0f64;
        for i in 0..n {
            let r = residual(&measure, &base_masks[i], &masks[i]);
            let gap = (r - cert.stage_residuals[i]).abs();
            worst_gap = worst_gap.max(gap);
            if gap > 1e-12 || r > cert.stage_bounds[i] + 1e-12 {
                stage_ok = false;
            }
        }
        stages.record(stage_ok, worst_gap);

        let mut max_subset = 0.0f64;
        let full = (1usize << n) - 1;
        for subset in 1..full {
            let mut bu = CellMask::new_empty(n_points);
            let mut su = CellMask::new_empty(n_points);
            for i in 0..n {
                if subset & (1 << i) != 0 {
                    bu = bu.union(&base_masks[i]);
                    su = su.union(&masks[i]);
                }
            }
            max_subset = max_subset.max(residual(&measure, &bu, &su));
        }
        let gap = (max_subset - cert.max_subset_residual).abs();
        subsets.record(gap < 1e-12 && max_subset <= cert.epsilon + 1e-12, gap);
    }
    vec![partition.outcome(), stages.outcome(), subsets.outcome()]
}

pub fn run_verify(cfg: &VerifyConfig, out_dir: &Path) -> Result<RunOutput, ScenarioError> {
    fs::create_dir_all(out_dir)
        .map_err(|e| ScenarioError::Io(format!("{}: {e}", out_dir.display())))?;

    let mut checks: Vec<CheckOutcome> = Vec::new();
    if cfg.split_trials + cfg.tree_trials + cfg.partition_trials == 0 {
        checks.push(CheckOutcome::fail(
            "suite-nonempty",
            "all trial counts are zero; nothing was verified".into(),
        ));
    }

    let mut halted = false;
    let suites: [(&str, Box<dyn FnOnce() -> Vec<CheckOutcome>>); 3] = [
        ("splits", {
            let (s, t, f) = (cfg.seed, cfg.split_trials, cfg.inject_fault);
            Box::new(move || split_suite(s, t, f))
        }),
        ("trees", {
            let (s, t) = (cfg.seed.wrapping_add(1), cfg.tree_trials);
            Box::new(move || tree_suite(s, t))
        }),
        ("partitions", {
            let (s, t) = (cfg.seed.wrapping_add(2), cfg.partition_trials);
            Box::new(move || partition_suite(s, t))
        }),
    ];
    for (name, suite) in suites {
        if halted {
            checks.push(CheckOutcome::skip(name, "skipped by fail-fast".into()));
            continue;
        }
        let outcomes = suite();
        if cfg.fail_fast && outcomes.iter().any(|c| !c.passed()) {
            halted = true;
        }
        checks.extend(outcomes);
    }

    let report = RunReport {
        scenario: "verify".into(),
        warnings: if cfg.inject_fault {
            vec!["fault injection active: the zero-proximity check must fail".into()]
        } else {
            Vec::new()
        },
        checks,
        summary: json!({
            "seed": cfg.seed,
            "split_trials": cfg.split_trials,
            "tree_trials": cfg.tree_trials,
            "partition_trials": cfg.partition_trials,
            "inject_fault": cfg.inject_fault,
        }),
    };
    let path = out_dir.join("report.json");
    write_json(&path, &report)?;
    Ok(RunOutput { report, files: vec![path] })
}
