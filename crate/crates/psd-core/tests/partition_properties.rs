//! Randomized checks of certified partitions and weak-convergence
//! diagnostics over one-dimensional scalar measures.

use psd_core::cells::{is_partition, CellMask};
use psd_core::finite::Region;
use psd_core::measure::{certified_partition, weak_convergence_check, DiscreteScalarMeasure};
use psd_core::sampling as smp;
use rand_chacha::ChaCha8Rng;

/// Random measure on distinct 1-D points together with quantile-cut
/// interval regions partitioning its support.
fn measure_with_base(
    rng: &mut ChaCha8Rng,
    n_points: usize,
    n_regions: usize,
) -> (DiscreteScalarMeasure, Vec<Region>) {
    let measure = smp::random_scalar_measure(rng, n_points, 1);
    let mut xs: Vec<f64> = measure.points().iter().map(|p| p[0]).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // cuts midway between support points, spread across the range
    let mut cuts = Vec::with_capacity(n_regions - 1);
    for j in 1..n_regions {
        let idx = j * (n_points - 1) / n_regions;
        cuts.push(0.5 * (xs[idx] + xs[idx + 1]));
    }
    cuts.dedup();
    let mut base = Vec::with_capacity(cuts.len() + 1);
    base.push(Region::half_line_below(cuts[0]));
    for w in cuts.windows(2) {
        base.push(Region::interval(w[0], w[1]));
    }
    base.push(Region::half_line_above(*cuts.last().unwrap()));
    (measure, base)
}

fn symdiff_mass(measure: &DiscreteScalarMeasure, a: &CellMask, b: &CellMask) -> f64 {
    let d = a.difference(b).union(&b.difference(a));
    measure.mask_mass(&d)
}

#[test]
fn certified_partitions_hold_their_bounds() {
    let mut rng = smp::seeded_rng(307);
    let deltas = [0.02, 0.05, 0.1, 0.2];
    for k in 0..100 {
        let n_points = 6 + k % 19;
        let n_regions = 2 + k % 4;
        if n_regions + 1 > n_points {
            continue;
        }
        let (measure, base) = measure_with_base(&mut rng, n_points, n_regions);
        if base.len() < 2 {
            continue;
        }
        let delta = deltas[k % deltas.len()];
        let (masks, cert) = certified_partition(&measure, &base, delta).unwrap();

        assert_eq!(cert.n, base.len());
        assert!(is_partition(&masks, measure.len()), "instance #{k}");
        assert!((cert.epsilon - 2.0 * ((cert.n - 1) as f64).powi(2) * delta).abs() < 1e-12);

        // stage residuals: recomputed from the returned masks
        for (i, mask) in masks.iter().enumerate() {
            let claimed = measure.support_mask(&base[i]);
            let residual = symdiff_mass(&measure, mask, &claimed).sqrt();
            assert!(
                (residual - cert.stage_residuals[i]).abs() < 1e-12,
                "stage {i} residual mismatch on #{k}"
            );
            assert!(
                residual <= cert.stage_bounds[i] + 1e-12,
                "stage {i} residual {residual} breaks bound {} on #{k}",
                cert.stage_bounds[i]
            );
        }

        // subset residuals: every nonempty proper union
        let n = masks.len();
        let mut worst = 0.0f64;
        for subset in 1u32..(1 << n) - 1 {
            let mut built = CellMask::new_empty(measure.len());
            let mut claimed = CellMask::new_empty(measure.len());
            for i in 0..n {
                if subset & (1 << i) != 0 {
                    built = built.union(&masks[i]);
                    claimed = claimed.union(&measure.support_mask(&base[i]));
                }
            }
            worst = worst.max(symdiff_mass(&measure, &built, &claimed).sqrt());
        }
        assert!((worst - cert.max_subset_residual).abs() < 1e-12);
        assert!(
            worst <= cert.epsilon + 1e-12,
            "subset residual {worst} breaks ε = {} on #{k}",
            cert.epsilon
        );
    }
}

#[test]
fn certified_partition_rejects_non_covering_base() {
    let mut rng = smp::seeded_rng(311);
    let (measure, mut base) = measure_with_base(&mut rng, 12, 3);
    if base.len() >= 3 {
        base.pop();
        assert!(certified_partition(&measure, &base, 0.1).is_err());
    }
}

#[test]
fn weak_convergence_separates_mixture_families() {
    let mut rng = smp::seeded_rng(313);
    for _ in 0..20 {
        let limit = smp::random_scalar_measure(&mut rng, 12, 1);
        let other = smp::random_scalar_measure(&mut rng, 12, 1);
        let tests = vec![
            Region::half_line_below(0.0),
            Region::half_line_above(1.0),
            Region::interval(-3.0, 3.0),
            Region::Everything,
        ];

        // mixture family collapsing onto the limit
        let family: Vec<DiscreteScalarMeasure> = (1..=10)
            .map(|k| {
                let a = 0.25f64.powi(k);
                let weights: Vec<f64> = limit
                    .weights()
                    .iter()
                    .zip(other.weights())
                    .map(|(w, u)| (1.0 - a) * w + a * u)
                    .collect();
                DiscreteScalarMeasure::new(limit.points().to_vec(), weights).unwrap()
            })
            .collect();
        let report = weak_convergence_check(&family, &limit, &tests, 1e-3).unwrap();
        assert!(report.converged, "residuals: {:?}", report.residuals);
        for w in report.residuals.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "residuals not decreasing");
        }

        // family pinned away from the limit must be flagged
        let stuck: Vec<DiscreteScalarMeasure> = (0..5).map(|_| other.clone()).collect();
        let bad = weak_convergence_check(&stuck, &limit, &tests, 1e-3).unwrap();
        assert!(!bad.converged);
        assert!(!bad.offending.is_empty());
    }
}
